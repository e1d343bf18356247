#pragma once
// Hyperparameter spaces: declaration, validation, prior sampling and the
// native <-> unit-cube transform used by the Parzen surrogate.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "boss/common.hpp"

namespace boss {

enum class ParamKind { log_uniform_float, uniform_float, int_uniform };

std::string_view to_string(ParamKind kind);
std::optional<ParamKind> parse_param_kind(std::string_view text);

struct ParamSpec {
  std::string name;
  ParamKind kind = ParamKind::uniform_float;
  double low = 0.0;
  double high = 1.0;

  bool operator==(const ParamSpec&) const = default;
};

using UnitVector = std::vector<double>;

// Native-unit values, stored in the order of the owning SearchSpace.
class ParamVector {
 public:
  ParamVector() = default;
  ParamVector(std::vector<std::string> names, std::vector<double> values);

  std::size_t size() const { return values_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<double>& values() const { return values_; }

  // Throws boss::Error for an unknown name.
  double at(std::string_view name) const;
  std::optional<double> find(std::string_view name) const;

  bool operator==(const ParamVector&) const = default;

 private:
  std::vector<std::string> names_;
  std::vector<double> values_;
};

struct ValidationIssue {
  std::string param;
  std::string message;
};

class SearchSpace {
 public:
  SearchSpace() = default;
  explicit SearchSpace(std::vector<ParamSpec> params) : params_(std::move(params)) {}

  const std::vector<ParamSpec>& params() const { return params_; }
  std::size_t dimension() const { return params_.size(); }
  std::optional<std::size_t> index_of(std::string_view name) const;

  // Every violated invariant, each tagged with its parameter. Empty = valid.
  std::vector<ValidationIssue> validate() const;
  // Throws boss::Error listing all issues when invalid.
  void require_valid() const;

  ParamVector sample_prior(Rng& rng) const;
  UnitVector to_unit(const ParamVector& v) const;
  ParamVector from_unit(const UnitVector& u) const;

  // Checks names, bounds and integrality. Throws boss::Error on violation.
  void check_member(const ParamVector& v) const;

  bool operator==(const SearchSpace&) const = default;

 private:
  std::vector<ParamSpec> params_;
};

// The four-parameter space searched over by default: learning rate l,
// momentum complement m (coefficient is 1 - m), weight decay w, batch size b.
SearchSpace default_training_space();

}  // namespace boss
