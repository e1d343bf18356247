#pragma once
// Tree-structured Parzen Estimator surrogate.
//
// Observations are split at the gamma-quantile of the objective into a good
// set and a bad set. Each set is modelled by an independent per-dimension
// mixture of truncated Gaussians on [0, 1] plus a uniform prior component.
// New configurations are drawn from the good density and the candidate with
// the largest log l(x) - log g(x) wins. Objectives are higher-is-better.

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "boss/search_space.hpp"

namespace boss::tpe {

struct Observation {
  ParamVector params;
  double objective = 0.0;  // -inf marks a failed trial
  std::int64_t trial_id = 0;
};

inline constexpr double failed_objective = -std::numeric_limits<double>::infinity();

// Insertion-ordered set of observations. The label identifies which set a
// suggestion read from (warm-up vs. distillation phase), for auditing.
class ObservationSet {
 public:
  ObservationSet() = default;
  explicit ObservationSet(std::string label) : label_(std::move(label)) {}

  // Throws on duplicate trial_id or a NaN/+inf objective.
  void add(Observation obs);

  const std::vector<Observation>& observations() const { return obs_; }
  std::size_t size() const { return obs_.size(); }
  bool empty() const { return obs_.empty(); }
  const std::string& label() const { return label_; }
  bool contains(std::int64_t trial_id) const;

 private:
  std::string label_;
  std::vector<Observation> obs_;
};

struct TpeConfig {
  double gamma = 0.25;
  int n_ei_candidates = 24;
  int n_startup = 10;
  double bandwidth_floor = 1e-3;
  double prior_weight = 1.0;

  void validate() const;
  bool operator==(const TpeConfig&) const = default;
};

// Highest objective, ties to the earliest trial_id. Throws on an empty set.
const Observation& best_observed(const ObservationSet& obs);

struct ParzenSplit {
  double gamma = 0.25;
  double phi_star = failed_objective;
  std::vector<UnitVector> good;
  std::vector<UnitVector> bad;
  std::vector<std::int64_t> good_ids;
  std::vector<std::int64_t> bad_ids;
};

// Good set = top max(1, ceil(gamma * n)) finite observations, ties to the more
// recent insertion. Failed observations always land in the bad set.
ParzenSplit split_observations(const ObservationSet& obs, const SearchSpace& space, double gamma);

struct DimensionMixture {
  // Point components; the uniform prior component is stored separately.
  std::vector<double> centers;
  std::vector<double> bandwidths;
  std::vector<double> weights;
  double prior_weight = 1.0;
  // Truncation normalizer per component: Phi((1-mu)/h) - Phi(-mu/h).
  std::vector<double> mass;

  // Mixture density at x in [0, 1].
  double pdf(double x) const;
};

class ParzenDensity {
 public:
  ParzenDensity() = default;
  ParzenDensity(std::size_t dimension, std::vector<DimensionMixture> dims)
      : dimension_(dimension), dims_(std::move(dims)) {}

  std::size_t dimension() const { return dimension_; }
  const std::vector<DimensionMixture>& dims() const { return dims_; }
  std::size_t point_count() const { return dims_.empty() ? 0 : dims_[0].centers.size(); }

 private:
  std::size_t dimension_ = 0;
  std::vector<DimensionMixture> dims_;
};

ParzenDensity build_density(const std::vector<UnitVector>& points, std::size_t dimension,
                            const TpeConfig& config);

// Sum over dimensions of the log mixture density. Throws outside [0,1]^d.
double log_density(const ParzenDensity& density, const UnitVector& x);

// log l(x) - log g(x).
double acquisition_score(const ParzenDensity& good, const ParzenDensity& bad, const UnitVector& x);

// Independent per-dimension mixture draw.
UnitVector sample_density(const ParzenDensity& density, Rng& rng);

struct Candidate {
  UnitVector point;
  double score = 0.0;
};

struct Suggestion {
  ParamVector params;
  UnitVector unit;
  bool from_prior = false;
  std::vector<Candidate> candidates;  // empty when from_prior
  std::size_t chosen = 0;
};

// Index of the first maximal score.
std::size_t argmax_candidate(const std::vector<Candidate>& candidates);

Suggestion suggest(const ObservationSet& obs, const SearchSpace& space, const TpeConfig& config, Rng& rng);

}  // namespace boss::tpe
