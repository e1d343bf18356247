#include "boss/tpe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace boss::tpe {
namespace {

constexpr double inv_sqrt_2pi = 0.39894228040143267794;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double sample_std(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace

void ObservationSet::add(Observation obs) {
  if (std::isnan(obs.objective) || obs.objective == std::numeric_limits<double>::infinity())
    throw Error("observation objective must be finite or the failed-trial sentinel");
  if (contains(obs.trial_id)) throw Error("duplicate trial_id " + std::to_string(obs.trial_id));
  obs_.push_back(std::move(obs));
}

bool ObservationSet::contains(std::int64_t trial_id) const {
  return std::any_of(obs_.begin(), obs_.end(), [&](const Observation& o) { return o.trial_id == trial_id; });
}

void TpeConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw Error("tpe.gamma must lie in (0, 1)");
  if (n_ei_candidates < 1) throw Error("tpe.n_ei_candidates must be >= 1");
  if (n_startup < 1) throw Error("tpe.n_startup must be >= 1");
  if (!(bandwidth_floor > 0.0 && bandwidth_floor <= 1.0)) throw Error("tpe.bandwidth_floor must lie in (0, 1]");
  if (!(prior_weight > 0.0)) throw Error("tpe.prior_weight must be > 0");
}

const Observation& best_observed(const ObservationSet& obs) {
  if (obs.empty()) throw Error("best_observed: empty observation set");
  const Observation* best = &obs.observations().front();
  for (const auto& o : obs.observations()) {
    if (o.objective > best->objective || (o.objective == best->objective && o.trial_id < best->trial_id))
      best = &o;
  }
  return *best;
}

ParzenSplit split_observations(const ObservationSet& obs, const SearchSpace& space, double gamma) {
  if (obs.empty()) throw Error("split_observations: empty observation set");
  if (!(gamma > 0.0 && gamma < 1.0)) throw Error("split_observations: gamma must lie in (0, 1)");
  const auto& all = obs.observations();
  const std::size_t n = all.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Descending objective; among equals the later insertion first.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (all[a].objective != all[b].objective) return all[a].objective > all[b].objective;
    return a > b;
  });
  std::size_t finite = static_cast<std::size_t>(
      std::count_if(all.begin(), all.end(), [](const Observation& o) { return std::isfinite(o.objective); }));
  std::size_t n_good = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(gamma * static_cast<double>(n))));
  n_good = std::min(n_good, finite);

  ParzenSplit split;
  split.gamma = gamma;
  std::vector<bool> is_good(n, false);
  for (std::size_t k = 0; k < n_good; ++k) is_good[order[k]] = true;
  // Keep insertion order inside each half.
  for (std::size_t i = 0; i < n; ++i) {
    auto u = space.to_unit(all[i].params);
    if (is_good[i]) {
      split.good.push_back(std::move(u));
      split.good_ids.push_back(all[i].trial_id);
    } else {
      split.bad.push_back(std::move(u));
      split.bad_ids.push_back(all[i].trial_id);
    }
  }
  if (n_good > 0) split.phi_star = all[order[n_good - 1]].objective;
  return split;
}

double DimensionMixture::pdf(double x) const {
  double total = prior_weight;  // uniform density on [0,1] is 1
  for (std::size_t k = 0; k < centers.size(); ++k) {
    double z = (x - centers[k]) / bandwidths[k];
    total += weights[k] * inv_sqrt_2pi * std::exp(-0.5 * z * z) / (bandwidths[k] * mass[k]);
  }
  return total;
}

ParzenDensity build_density(const std::vector<UnitVector>& points, std::size_t dimension, const TpeConfig& config) {
  for (const auto& p : points)
    if (p.size() != dimension) throw Error("build_density: inconsistent point dimension");
  const std::size_t n = points.size();
  const double prior = config.prior_weight / (static_cast<double>(n) + config.prior_weight);
  std::vector<DimensionMixture> dims(dimension);
  for (std::size_t d = 0; d < dimension; ++d) {
    auto& mix = dims[d];
    mix.prior_weight = n == 0 ? 1.0 : prior;
    if (n == 0) continue;
    std::vector<double> xs(n);
    for (std::size_t i = 0; i < n; ++i) xs[i] = points[i][d];
    double sigma = std::max(sample_std(xs), 0.1);
    double bw = std::clamp(sigma * std::pow(static_cast<double>(n), -0.2), config.bandwidth_floor, 1.0);
    double w = (1.0 - prior) / static_cast<double>(n);
    for (double c : xs) {
      mix.centers.push_back(c);
      mix.bandwidths.push_back(bw);
      mix.weights.push_back(w);
      mix.mass.push_back(normal_cdf((1.0 - c) / bw) - normal_cdf(-c / bw));
    }
  }
  return ParzenDensity(dimension, std::move(dims));
}

double log_density(const ParzenDensity& density, const UnitVector& x) {
  if (x.size() != density.dimension()) throw Error("log_density: dimension mismatch");
  double total = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    if (!(x[d] >= 0.0 && x[d] <= 1.0)) throw Error("log_density: point outside the unit cube");
    total += std::log(density.dims()[d].pdf(x[d]));
  }
  return total;
}

double acquisition_score(const ParzenDensity& good, const ParzenDensity& bad, const UnitVector& x) {
  if (good.dimension() != bad.dimension()) throw Error("acquisition_score: dimension mismatch");
  return log_density(good, x) - log_density(bad, x);
}

UnitVector sample_density(const ParzenDensity& density, Rng& rng) {
  UnitVector out(density.dimension());
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t d = 0; d < density.dimension(); ++d) {
    const auto& mix = density.dims()[d];
    double pick = unif(rng);
    double acc = mix.prior_weight;
    std::size_t k = mix.centers.size();  // sentinel: prior component
    if (pick >= acc) {
      for (std::size_t j = 0; j < mix.centers.size(); ++j) {
        acc += mix.weights[j];
        if (pick < acc) {
          k = j;
          break;
        }
      }
      // Rounding can leave pick just above the final cumulative weight.
      if (k == mix.centers.size() && !mix.centers.empty()) k = mix.centers.size() - 1;
    }
    if (k == mix.centers.size()) {
      out[d] = unif(rng);
      continue;
    }
    std::normal_distribution<double> normal(mix.centers[k], mix.bandwidths[k]);
    double x;
    do {
      x = normal(rng);
    } while (!(x >= 0.0 && x <= 1.0));
    out[d] = x;
  }
  return out;
}

std::size_t argmax_candidate(const std::vector<Candidate>& candidates) {
  if (candidates.empty()) throw Error("argmax_candidate: no candidates");
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i)
    if (candidates[i].score > candidates[best].score) best = i;
  return best;
}

Suggestion suggest(const ObservationSet& obs, const SearchSpace& space, const TpeConfig& config, Rng& rng) {
  space.require_valid();
  config.validate();
  Suggestion s;
  if (obs.size() < static_cast<std::size_t>(config.n_startup)) {
    s.params = space.sample_prior(rng);
    s.unit = space.to_unit(s.params);
    s.from_prior = true;
    return s;
  }
  auto split = split_observations(obs, space, config.gamma);
  auto good = build_density(split.good, space.dimension(), config);
  auto bad = build_density(split.bad, space.dimension(), config);
  s.candidates.reserve(static_cast<std::size_t>(config.n_ei_candidates));
  for (int i = 0; i < config.n_ei_candidates; ++i) {
    Candidate c;
    c.point = sample_density(good, rng);
    c.score = acquisition_score(good, bad, c.point);
    s.candidates.push_back(std::move(c));
  }
  s.chosen = argmax_candidate(s.candidates);
  s.params = space.from_unit(s.candidates[s.chosen].point);
  s.unit = s.candidates[s.chosen].point;
  return s;
}

}  // namespace boss::tpe
