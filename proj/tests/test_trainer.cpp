#include <gtest/gtest.h>

#include <numeric>

#include "boss/trainer.hpp"

using namespace boss;
using namespace boss::nn;

namespace {

struct Split {
  Dataset train, val;
};

Split blobs(double separation, std::uint64_t seed, std::size_t n = 600) {
  auto all = make_blobs(n, 5, 3, separation, seed);
  auto [tr, va] = split_rows(all, n * 2 / 3);
  va.split = SplitTag::val;
  return {tr, va};
}

MlpParams fresh(std::uint64_t seed, std::size_t hidden = 16) {
  Rng rng(seed);
  return init_params({5, hidden, 3}, rng);
}

TrainConfig config(int epochs, std::uint64_t seed) {
  TrainConfig c;
  c.learning_rate = 0.05;
  c.momentum_coefficient = 0.9;
  c.weight_decay = 1e-4;
  c.batch_size = 32;
  c.epochs = epochs;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(Train, ZeroEpochsReturnsInit) {
  auto d = blobs(2.0, 1);
  auto init = fresh(2);
  auto res = train(d.train, d.val, config(0, 3), init);
  EXPECT_EQ(res.params, init);
  EXPECT_EQ(res.val_accuracy, evaluate(init, d.val));
  EXPECT_EQ(res.steps, 0);
}

TEST(Train, SeparableBlobsAreLearned) {
  auto d = blobs(8.0, 4);
  auto res = train(d.train, d.val, config(10, 5), fresh(6));
  ASSERT_FALSE(res.failed);
  EXPECT_GE(res.val_accuracy, 0.95);
  EXPECT_EQ(res.steps, 10 * 13);  // ceil(400 / 32) per epoch
}

TEST(Train, DeterministicPerSeed) {
  auto d = blobs(2.0, 7);
  auto a = train(d.train, d.val, config(4, 8), fresh(9));
  auto b = train(d.train, d.val, config(4, 8), fresh(9));
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.val_accuracy, b.val_accuracy);
  auto c = train(d.train, d.val, config(4, 10), fresh(9));
  EXPECT_NE(a.params, c.params);
}

TEST(Train, AlphaOneMatchesNoTeacher) {
  auto d = blobs(2.0, 11);
  auto teacher = train(d.train, d.val, config(3, 1), fresh(12)).params;
  auto plain = train(d.train, d.val, config(5, 2), fresh(13));
  for (auto kind : {DistillLoss::mse_logit, DistillLoss::kl_divergence}) {
    auto with = train(d.train, d.val, config(5, 2), fresh(13), TeacherSpec{&teacher, {1.0, kind, 4.0}});
    EXPECT_EQ(with.params, plain.params);
    EXPECT_EQ(with.val_accuracy, plain.val_accuracy);
  }
}

TEST(Train, AlphaZeroIgnoresLabels) {
  auto d = blobs(2.0, 14);
  auto teacher = train(d.train, d.val, config(3, 1), fresh(15)).params;
  Dataset permuted = d.train;
  for (int& y : permuted.labels) y = (y + 1) % 3;
  for (auto kind : {DistillLoss::mse_logit, DistillLoss::kl_divergence}) {
    TeacherSpec t{&teacher, {0.0, kind, 4.0}};
    auto a = train(d.train, d.val, config(4, 3), fresh(16), t);
    auto b = train(permuted, d.val, config(4, 3), fresh(16), t);
    EXPECT_EQ(a.params, b.params);
  }
}

TEST(Train, DivergenceIsReportedNotThrown) {
  auto d = blobs(2.0, 17);
  auto cfg = config(5, 1);
  cfg.learning_rate = 1e6;
  cfg.momentum_coefficient = 0.99;
  auto res = train(d.train, d.val, cfg, fresh(18));
  EXPECT_TRUE(res.failed);
  EXPECT_FALSE(res.failure.empty());
}

TEST(Train, RejectsInvalidConfigAndShapes) {
  auto d = blobs(2.0, 19);
  auto cfg = config(1, 1);
  cfg.batch_size = 0;
  EXPECT_THROW(train(d.train, d.val, cfg, fresh(1)), Error);
  Rng rng(1);
  auto wrong = init_params({4, 8, 3}, rng);
  EXPECT_THROW(train(d.train, d.val, config(1, 1), wrong), Error);
}

TEST(TrainConfigFrom, MapsSearchParameters) {
  ParamVector v({"l", "m", "w", "b"}, {0.01, 0.2, 1e-4, 300});
  auto c = train_config_from(v, {}, 3, 9, 200);
  EXPECT_EQ(c.learning_rate, 0.01);
  EXPECT_DOUBLE_EQ(c.momentum_coefficient, 0.8);
  EXPECT_EQ(c.weight_decay, 1e-4);
  EXPECT_EQ(c.batch_size, 200u);
  EXPECT_EQ(c.epochs, 3);

  ParamVector zero_m({"m"}, {0.0});
  auto z = train_config_from(zero_m, {}, 1, 1, 100);
  EXPECT_LT(z.momentum_coefficient, 1.0);
  EXPECT_EQ(z.learning_rate, TrainerDefaults{}.learning_rate);
  EXPECT_EQ(z.batch_size, 100u);
}
