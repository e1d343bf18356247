#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "boss/search_space.hpp"

using namespace boss;

TEST(SearchSpace, DefaultSpaceValidates) { EXPECT_TRUE(default_training_space().validate().empty()); }

TEST(SearchSpace, ValidateNamesOffendingParameter) {
  SearchSpace bad({{"lr", ParamKind::log_uniform_float, 0.0, 1.0}});
  auto issues = bad.validate();
  ASSERT_FALSE(issues.empty());
  EXPECT_EQ(issues.front().param, "lr");

  SearchSpace dup({{"a", ParamKind::uniform_float, 0, 1}, {"a", ParamKind::uniform_float, 0, 2}});
  auto d = dup.validate();
  ASSERT_FALSE(d.empty());
  EXPECT_NE(d.front().message.find("duplicate"), std::string::npos);

  SearchSpace inverted({{"x", ParamKind::uniform_float, 1, 1}, {"k", ParamKind::int_uniform, 3, 2}});
  EXPECT_EQ(inverted.validate().size(), 2u);
  Rng rng(1);
  EXPECT_THROW(inverted.sample_prior(rng), Error);
  EXPECT_FALSE(SearchSpace().validate().empty());
}

TEST(SearchSpace, PriorSamplesStayInBounds) {
  auto space = default_training_space();
  Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    auto v = space.sample_prior(rng);
    EXPECT_NO_THROW(space.check_member(v));
    EXPECT_EQ(v.at("b"), std::round(v.at("b")));
  }
  SearchSpace u({{"x", ParamKind::uniform_float, -2.0, 3.0}});
  for (int i = 0; i < 10000; ++i) {
    double x = u.sample_prior(rng).at("x");
    ASSERT_TRUE(x >= -2.0 && x <= 3.0);
  }
}

TEST(SearchSpace, DegenerateIntRange) {
  SearchSpace s({{"k", ParamKind::int_uniform, 5, 5}});
  Rng rng(1);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(s.sample_prior(rng).at("k"), 5.0);
  EXPECT_EQ(s.from_unit({0.73}).at("k"), 5.0);
  EXPECT_EQ(s.to_unit(s.from_unit({0.5}))[0], 0.0);
}

TEST(SearchSpace, LogUniformMedianIsGeometricMean) {
  SearchSpace s({{"l", ParamKind::log_uniform_float, 1e-3, 1.0}});
  Rng rng(42);
  int below = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) below += s.sample_prior(rng).at("l") < std::pow(10.0, -1.5);
  EXPECT_NEAR(below / double(n), 0.5, 0.02);
}

TEST(SearchSpace, LogUniformKolmogorovSmirnov) {
  SearchSpace s({{"w", ParamKind::log_uniform_float, 1e-5, 1e-2}});
  Rng rng(9);
  const int n = 10000;
  std::vector<double> z(n);
  const double lo = std::log(1e-5), hi = std::log(1e-2);
  for (auto& v : z) v = (std::log(s.sample_prior(rng).at("w")) - lo) / (hi - lo);
  std::sort(z.begin(), z.end());
  double ks = 0.0;
  for (int i = 0; i < n; ++i) ks = std::max({ks, (i + 1.0) / n - z[i], z[i] - double(i) / n});
  EXPECT_LT(ks, 0.02);
}

TEST(SearchSpace, UnitTransformExamples) {
  SearchSpace s({{"l", ParamKind::log_uniform_float, 1e-3, 1.0}, {"b", ParamKind::int_uniform, 64, 256}});
  EXPECT_EQ(s.to_unit(ParamVector({"l", "b"}, {1e-3, 64}))[0], 0.0);
  auto mid = s.to_unit(ParamVector({"l", "b"}, {std::pow(10.0, -1.5), 160}));
  EXPECT_NEAR(mid[0], 0.5, 1e-12);
  EXPECT_EQ(mid[1], 0.5);
  EXPECT_EQ(s.from_unit({0.2, 0.4999}).at("b"), 160.0);

  auto lows = s.from_unit({0.0, 0.0});
  EXPECT_EQ(lows.values(), (std::vector<double>{1e-3, 64}));
  auto highs = s.from_unit({1.0, 1.0});
  EXPECT_EQ(highs.values(), (std::vector<double>{1.0, 256}));
}

TEST(SearchSpace, UnitTransformErrors) {
  auto s = default_training_space();
  EXPECT_THROW(s.from_unit({0.5, 0.5, 1.2, 0.5}), Error);
  EXPECT_THROW(s.from_unit({0.5, 0.5}), Error);
  EXPECT_THROW(s.to_unit(ParamVector({"l", "m", "w", "b"}, {2.0, 0.1, 1e-3, 100})), Error);
  EXPECT_THROW(s.to_unit(ParamVector({"l", "m", "w", "b"}, {0.1, 0.1, 1e-3, 100.5})), Error);
}

// from_unit(to_unit(v)) for random members: ints exact, floats to a few ulps.
TEST(SearchSpace, RoundTripProperty) {
  SearchSpace s({{"l", ParamKind::log_uniform_float, 1e-3, 1.0},
                 {"x", ParamKind::uniform_float, -7.5, 2.25},
                 {"b", ParamKind::int_uniform, 64, 256}});
  Rng rng(5);
  for (int i = 0; i < 5000; ++i) {
    auto v = s.sample_prior(rng);
    auto back = s.from_unit(s.to_unit(v));
    EXPECT_EQ(back.at("b"), v.at("b"));
    EXPECT_NEAR(back.at("l"), v.at("l"), 4 * std::numeric_limits<double>::epsilon() * v.at("l"));
    EXPECT_NEAR(back.at("x"), v.at("x"), 4 * std::numeric_limits<double>::epsilon() * 7.5);
  }
  // Bounds survive the trip bit-exactly.
  auto lo = s.from_unit({0, 0, 0});
  EXPECT_EQ(s.from_unit(s.to_unit(lo)), lo);
  auto hi = s.from_unit({1, 1, 1});
  EXPECT_EQ(s.from_unit(s.to_unit(hi)), hi);
}
