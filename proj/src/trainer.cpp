#include "boss/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "boss/kernels.hpp"

namespace boss::nn {

void TrainConfig::validate(std::size_t n_train) const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw Error("learning_rate must be > 0");
  if (!(momentum_coefficient >= 0.0 && momentum_coefficient < 1.0)) throw Error("momentum coefficient must lie in [0, 1)");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) throw Error("weight_decay must be >= 0");
  if (batch_size < 1 || batch_size > n_train) throw Error("batch_size must lie in [1, n_train]");
  if (epochs < 0) throw Error("epochs must be >= 0");
}

TrainConfig train_config_from(const ParamVector& lambda, const TrainerDefaults& defaults, int epochs,
                              std::uint64_t seed, std::size_t n_train) {
  TrainConfig cfg;
  cfg.learning_rate = lambda.find("l").value_or(defaults.learning_rate);
  if (auto m = lambda.find("m"))
    cfg.momentum_coefficient = std::min(1.0 - *m, std::nextafter(1.0, 0.0));
  else
    cfg.momentum_coefficient = defaults.momentum;
  cfg.weight_decay = lambda.find("w").value_or(defaults.weight_decay);
  double b = lambda.find("b").value_or(static_cast<double>(defaults.batch_size));
  cfg.batch_size = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(std::max(b, 1.0))), 1, n_train);
  cfg.epochs = epochs;
  cfg.seed = seed;
  return cfg;
}

TrainResult train(const Dataset& train_ds, const Dataset& val_ds, const TrainConfig& cfg, const MlpParams& init,
                  const std::optional<TeacherSpec>& teacher) {
  const std::size_t n = train_ds.size();
  cfg.validate(n);
  if (init.shape().input != train_ds.dimension() || init.shape().classes != static_cast<std::size_t>(train_ds.n_classes))
    throw Error("train: initial parameters do not match the dataset");
  if (teacher) {
    if (teacher->params == nullptr || !(teacher->params->shape() == init.shape()))
      throw Error("train: teacher shape does not match the student");
    teacher->config.validate();
  }
  const bool distilling = teacher && teacher->config.alpha < 1.0;

  TrainResult result{init, 0.0, false, {}, 0};
  MlpParams& theta = result.params;
  std::vector<double> velocity(theta.data().size(), 0.0);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix64(cfg.seed));
  const auto& k = kernels::active();
  const std::size_t d = train_ds.dimension();

  Matrix xb;
  std::vector<int> yb;
  for (int epoch = 0; epoch < cfg.epochs && !result.failed; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t stop = std::min(n, start + cfg.batch_size);
      xb = Matrix(stop - start, d);
      yb.resize(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        auto src = train_ds.features.row(order[i]);
        std::copy(src.begin(), src.end(), xb.row(i - start).begin());
        yb[i - start] = train_ds.labels[order[i]];
      }
      std::optional<DistillTarget> target;
      Matrix teacher_logits;
      if (distilling) {
        teacher_logits = forward(*teacher->params, xb);
        target = DistillTarget{&teacher_logits, teacher->config};
      }
      auto lg = gradients(theta, xb, yb, target);
      if (!std::isfinite(lg.loss)) {
        result.failed = true;
        result.failure = "non-finite loss at epoch " + std::to_string(epoch);
        break;
      }
      k.sgd_update(theta.data().data(), velocity.data(), lg.grads.data().data(), velocity.size(),
                   cfg.learning_rate, cfg.momentum_coefficient, cfg.weight_decay);
      ++result.steps;
      if (!theta.all_finite()) {
        result.failed = true;
        result.failure = "non-finite parameters at epoch " + std::to_string(epoch);
        break;
      }
    }
  }
  if (!result.failed) result.val_accuracy = evaluate(theta, val_ds);
  return result;
}

}  // namespace boss::nn
