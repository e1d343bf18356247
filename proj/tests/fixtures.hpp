#pragma once
// Small study configurations that train in milliseconds.

#include "boss/orchestrator.hpp"

namespace fixture {

inline boss::BossConfig micro_config(int n_total = 12, int n_warmup = 4) {
  boss::BossConfig c;
  c.n_total = n_total;
  c.n_warmup = n_warmup;
  c.k_candidates = 3;
  c.tpe.n_startup = 3;
  c.tpe.n_ei_candidates = 8;
  c.space = boss::SearchSpace({{"l", boss::ParamKind::log_uniform_float, 1e-3, 1.0},
                               {"m", boss::ParamKind::log_uniform_float, 1e-3, 1.0},
                               {"w", boss::ParamKind::log_uniform_float, 1e-5, 1e-2},
                               {"b", boss::ParamKind::int_uniform, 16, 64}});
  c.trainer.epochs = 2;
  c.trainer.hidden = 8;
  c.dataset.n_train = 160;
  c.dataset.n_val = 80;
  c.dataset.dimension = 4;
  c.dataset.n_classes = 3;
  c.dataset.separation = 2.5;
  c.dataset.noise = boss::nn::NoiseKind::symmetric;
  c.dataset.noise_ratio = 0.1;
  c.baseline["b"] = 32;
  c.master_seed = 42;
  return c;
}

}  // namespace fixture
