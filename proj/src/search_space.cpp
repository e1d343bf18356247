#include "boss/search_space.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace boss {

std::string_view to_string(ParamKind kind) {
  switch (kind) {
    case ParamKind::log_uniform_float: return "log-uniform-float";
    case ParamKind::uniform_float: return "uniform-float";
    case ParamKind::int_uniform: return "int-uniform";
  }
  return "?";
}

std::optional<ParamKind> parse_param_kind(std::string_view text) {
  if (text == "log-uniform-float" || text == "log-uniform") return ParamKind::log_uniform_float;
  if (text == "uniform-float" || text == "uniform") return ParamKind::uniform_float;
  if (text == "int-uniform" || text == "int") return ParamKind::int_uniform;
  return std::nullopt;
}

ParamVector::ParamVector(std::vector<std::string> names, std::vector<double> values)
    : names_(std::move(names)), values_(std::move(values)) {
  if (names_.size() != values_.size()) throw Error("ParamVector: names/values size mismatch");
}

std::optional<double> ParamVector::find(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return values_[i];
  return std::nullopt;
}

double ParamVector::at(std::string_view name) const {
  if (auto v = find(name)) return *v;
  throw Error("ParamVector: no parameter named '" + std::string(name) + "'");
}

std::optional<std::size_t> SearchSpace::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (params_[i].name == name) return i;
  return std::nullopt;
}

std::vector<ValidationIssue> SearchSpace::validate() const {
  std::vector<ValidationIssue> issues;
  if (params_.empty()) issues.push_back({"", "search space has no parameters"});
  std::set<std::string> seen;
  for (const auto& p : params_) {
    if (p.name.empty()) issues.push_back({p.name, "parameter name is empty"});
    if (!seen.insert(p.name).second) issues.push_back({p.name, "duplicate parameter name"});
    if (!std::isfinite(p.low) || !std::isfinite(p.high)) {
      issues.push_back({p.name, "bounds must be finite"});
      continue;
    }
    switch (p.kind) {
      case ParamKind::log_uniform_float:
        if (!(p.low > 0.0)) issues.push_back({p.name, "log-uniform requires low > 0"});
        [[fallthrough]];
      case ParamKind::uniform_float:
        if (!(p.low < p.high)) issues.push_back({p.name, "requires low < high"});
        break;
      case ParamKind::int_uniform:
        if (!(p.low <= p.high)) issues.push_back({p.name, "requires low <= high"});
        if (p.low != std::round(p.low) || p.high != std::round(p.high))
          issues.push_back({p.name, "int-uniform bounds must be integers"});
        break;
    }
  }
  return issues;
}

void SearchSpace::require_valid() const {
  auto issues = validate();
  if (issues.empty()) return;
  std::ostringstream os;
  os << "invalid search space:";
  for (const auto& i : issues) os << " [" << (i.param.empty() ? "<space>" : i.param) << ": " << i.message << "]";
  throw Error(os.str());
}

ParamVector SearchSpace::sample_prior(Rng& rng) const {
  require_valid();
  std::vector<std::string> names;
  std::vector<double> values;
  for (const auto& p : params_) {
    names.push_back(p.name);
    switch (p.kind) {
      case ParamKind::uniform_float:
        values.push_back(std::clamp(std::uniform_real_distribution<double>(p.low, p.high)(rng), p.low, p.high));
        break;
      case ParamKind::log_uniform_float: {
        double x = std::exp(std::uniform_real_distribution<double>(std::log(p.low), std::log(p.high))(rng));
        values.push_back(std::clamp(x, p.low, p.high));
        break;
      }
      case ParamKind::int_uniform: {
        auto lo = static_cast<long long>(p.low), hi = static_cast<long long>(p.high);
        values.push_back(static_cast<double>(std::uniform_int_distribution<long long>(lo, hi)(rng)));
        break;
      }
    }
  }
  return ParamVector(std::move(names), std::move(values));
}

void SearchSpace::check_member(const ParamVector& v) const {
  if (v.size() != params_.size()) throw Error("parameter vector has wrong dimension");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& p = params_[i];
    double x = v.values()[i];
    if (v.names()[i] != p.name) throw Error("parameter vector name mismatch at '" + p.name + "'");
    if (!(x >= p.low && x <= p.high))
      throw Error("parameter '" + p.name + "' out of bounds: " + std::to_string(x));
    if (p.kind == ParamKind::int_uniform && x != std::round(x))
      throw Error("parameter '" + p.name + "' must be integral");
  }
}

UnitVector SearchSpace::to_unit(const ParamVector& v) const {
  check_member(v);
  UnitVector u(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& p = params_[i];
    double x = v.values()[i];
    switch (p.kind) {
      case ParamKind::uniform_float:
      case ParamKind::int_uniform:
        u[i] = p.high > p.low ? (x - p.low) / (p.high - p.low) : 0.0;
        break;
      case ParamKind::log_uniform_float: {
        double ll = std::log(p.low), lh = std::log(p.high);
        u[i] = (std::log(x) - ll) / (lh - ll);
        break;
      }
    }
    u[i] = std::clamp(u[i], 0.0, 1.0);
  }
  return u;
}

ParamVector SearchSpace::from_unit(const UnitVector& u) const {
  if (u.size() != params_.size()) throw Error("unit vector has wrong dimension");
  std::vector<std::string> names;
  std::vector<double> values;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& p = params_[i];
    double t = u[i];
    if (!(t >= 0.0 && t <= 1.0))
      throw Error("unit coordinate for '" + p.name + "' outside [0,1]: " + std::to_string(t));
    double x = 0.0;
    switch (p.kind) {
      case ParamKind::uniform_float:
        x = t == 1.0 ? p.high : p.low + t * (p.high - p.low);
        break;
      case ParamKind::log_uniform_float: {
        double ll = std::log(p.low), lh = std::log(p.high);
        x = t == 0.0 ? p.low : t == 1.0 ? p.high : std::exp(ll + t * (lh - ll));
        break;
      }
      case ParamKind::int_uniform:
        x = std::round(p.low + t * (p.high - p.low));
        break;
    }
    names.push_back(p.name);
    values.push_back(std::clamp(x, p.low, p.high));
  }
  return ParamVector(std::move(names), std::move(values));
}

SearchSpace default_training_space() {
  return SearchSpace({{"l", ParamKind::log_uniform_float, 1e-3, 1.0},
                      {"m", ParamKind::log_uniform_float, 1e-3, 1.0},
                      {"w", ParamKind::log_uniform_float, 1e-5, 1e-2},
                      {"b", ParamKind::int_uniform, 64, 256}});
}

}  // namespace boss
