#pragma once
// Minibatch SGD with momentum and weight decay, optionally distilling from a
// frozen teacher.

#include <cstdint>
#include <optional>
#include <string>

#include "boss/mlp.hpp"
#include "boss/search_space.hpp"

namespace boss::nn {

struct TrainConfig {
  double learning_rate = 0.1;
  double momentum_coefficient = 0.9;
  double weight_decay = 5e-4;
  std::size_t batch_size = 128;
  int epochs = 10;
  std::uint64_t seed = 0;

  void validate(std::size_t n_train) const;
};

// Fixed training settings that are not searched over. Values missing from a
// ParamVector fall back to these.
struct TrainerDefaults {
  double learning_rate = 0.1;
  double momentum = 0.9;  // coefficient, i.e. 1 - m
  double weight_decay = 5e-4;
  std::size_t batch_size = 128;
};

// Maps l, m, w, b onto a TrainConfig. The sampled m is the momentum
// complement: coefficient = 1 - m, capped just below 1. Batch size is clamped
// to [1, n_train].
TrainConfig train_config_from(const ParamVector& lambda, const TrainerDefaults& defaults, int epochs,
                              std::uint64_t seed, std::size_t n_train);

struct TeacherSpec {
  const MlpParams* params = nullptr;
  DistillConfig config;
};

struct TrainResult {
  MlpParams params;
  double val_accuracy = 0.0;
  bool failed = false;
  std::string failure;
  int steps = 0;
};

// Runs epochs * ceil(n / b) SGD steps from `init`. A non-finite loss or
// parameter ends the run and is reported through `failed`, never thrown.
TrainResult train(const Dataset& train_ds, const Dataset& val_ds, const TrainConfig& cfg, const MlpParams& init,
                  const std::optional<TeacherSpec>& teacher = std::nullopt);

}  // namespace boss::nn
