#pragma once
// One-hidden-layer ReLU classifier d -> H -> C with hand-written backprop,
// plus the task and distillation losses it is trained on.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "boss/dataset.hpp"

namespace boss::nn {

struct MlpShape {
  std::size_t input = 0;
  std::size_t hidden = 0;
  std::size_t classes = 0;

  std::size_t parameter_count() const { return hidden * input + hidden + classes * hidden + classes; }
  bool operator==(const MlpShape&) const = default;
};

// All parameters in one contiguous buffer: W1 (H x d), b1 (H), W2 (C x H), b2 (C).
class MlpParams {
 public:
  MlpParams() = default;
  explicit MlpParams(MlpShape shape) : shape_(shape), data_(shape.parameter_count(), 0.0) {}
  MlpParams(MlpShape shape, std::vector<double> data);

  const MlpShape& shape() const { return shape_; }
  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  std::span<double> w1() { return {data_.data(), shape_.hidden * shape_.input}; }
  std::span<double> b1() { return {data_.data() + off_b1(), shape_.hidden}; }
  std::span<double> w2() { return {data_.data() + off_w2(), shape_.classes * shape_.hidden}; }
  std::span<double> b2() { return {data_.data() + off_b2(), shape_.classes}; }
  std::span<const double> w1() const { return {data_.data(), shape_.hidden * shape_.input}; }
  std::span<const double> b1() const { return {data_.data() + off_b1(), shape_.hidden}; }
  std::span<const double> w2() const { return {data_.data() + off_w2(), shape_.classes * shape_.hidden}; }
  std::span<const double> b2() const { return {data_.data() + off_b2(), shape_.classes}; }

  bool all_finite() const;
  bool operator==(const MlpParams&) const = default;

 private:
  std::size_t off_b1() const { return shape_.hidden * shape_.input; }
  std::size_t off_w2() const { return off_b1() + shape_.hidden; }
  std::size_t off_b2() const { return off_w2() + shape_.classes * shape_.hidden; }

  MlpShape shape_;
  std::vector<double> data_;
};

using MlpGradients = MlpParams;

// Glorot-uniform weights, zero biases.
MlpParams init_params(MlpShape shape, Rng& rng);

// Row-wise logits; throws on a column-count mismatch.
Matrix forward(const MlpParams& params, const Matrix& x);

// Stable softmax; throws on non-finite input.
std::vector<double> softmax(std::span<const double> logits);

double cross_entropy_loss(const Matrix& logits, std::span<const int> labels);
double mse_logit_loss(const Matrix& student, const Matrix& teacher);
double kl_distill_loss(const Matrix& student, const Matrix& teacher, double temperature);
double combined_loss(double gt, double dt, double alpha);

enum class DistillLoss { mse_logit, kl_divergence };

struct DistillConfig {
  double alpha = 0.5;
  DistillLoss loss = DistillLoss::mse_logit;
  double temperature = 4.0;

  void validate() const;
  bool operator==(const DistillConfig&) const = default;
};

struct DistillTarget {
  const Matrix* teacher_logits = nullptr;
  DistillConfig config;
};

struct LossAndGradients {
  double loss = 0.0;
  MlpGradients grads;
};

// Exact gradient of the active loss: cross-entropy alone, or
// alpha * CE + (1 - alpha) * distillation when a target is supplied. The
// distillation branch is skipped entirely at alpha = 1 and the task branch at
// alpha = 0, so those limits are exact rather than multiplied by zero.
LossAndGradients gradients(const MlpParams& params, const Matrix& x, std::span<const int> labels,
                           const std::optional<DistillTarget>& distill = std::nullopt);

// Top-1 accuracy, argmax ties to the lowest class id.
double evaluate(const MlpParams& params, const Dataset& ds);

}  // namespace boss::nn
