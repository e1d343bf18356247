#include <gtest/gtest.h>

#include <string>

#include "boss/config.hpp"

using namespace boss;

namespace {

const char* minimal = R"(space:
  - {name: l, kind: log-uniform, low: 1.0e-3, high: 1.0}
  - {name: b, kind: int-uniform, low: 16, high: 64}
boss: {n_total: 6, n_warmup: 2, k_candidates: 2, alpha: 0.5}
tpe: {gamma: 0.25}
trainer: {epochs: 1, hidden: 4}
dataset: {generator: blobs, n_train: 50, n_val: 20, d: 2, classes: 2, separation: 1.0, seed: 1}
)";

std::string error_of(const std::string& text) {
  try {
    config::parse_config(text, "t.cfg");
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(ConfigFile, ParsesMinimal) {
  auto f = config::parse_config(minimal, "t.cfg");
  EXPECT_EQ(f.config.n_total, 6);
  EXPECT_EQ(f.config.space.dimension(), 2u);
  EXPECT_EQ(f.config.space.params()[1].kind, ParamKind::int_uniform);
  EXPECT_EQ(f.config.trainer.hidden, 4u);
  EXPECT_EQ(f.seeds, (std::vector<std::uint64_t>{1}));
  EXPECT_EQ(f.config.master_seed, 1u);
}

TEST(ConfigFile, UnknownKeyNamesLine) {
  std::string text = minimal;
  text += "seeds: [4, 5]\n";
  text.replace(text.find("tpe: {gamma: 0.25}"), 18, "tpe: {gamma: 0.25, gama: 1}");
  auto err = error_of(text);
  EXPECT_NE(err.find("t.cfg:5"), std::string::npos) << err;
  EXPECT_NE(err.find("gama"), std::string::npos) << err;
}

TEST(ConfigFile, MissingSectionIsReported) {
  std::string text = minimal;
  text.erase(text.find("trainer:"), std::string("trainer: {epochs: 1, hidden: 4}\n").size());
  EXPECT_NE(error_of(text).find("missing section 'trainer'"), std::string::npos);
}

TEST(ConfigFile, RejectsBadValues) {
  std::string text = minimal;
  text.replace(text.find("n_warmup: 2"), 11, "n_warmup: 9");
  EXPECT_FALSE(error_of(text).empty());
  std::string kind = minimal;
  kind.replace(kind.find("int-uniform"), 11, "categorical");
  EXPECT_NE(error_of(kind).find("categorical"), std::string::npos);
  EXPECT_FALSE(error_of("space: [").empty());
}

TEST(ConfigFile, SeedsOverrideMasterSeed) {
  auto f = config::parse_config(std::string(minimal) + "seeds: [9, 10]\n");
  EXPECT_EQ(f.seeds, (std::vector<std::uint64_t>{9, 10}));
  EXPECT_EQ(f.config.master_seed, 9u);
}

TEST(ConfigFile, ShippedConfigsLoad) {
  for (const char* name : {"example.cfg", "micro.cfg"}) {
    auto f = config::load_config(std::string(BOSS_CONFIG_DIR) + "/" + name);
    EXPECT_NO_THROW(f.config.validate()) << name;
  }
  auto ex = config::load_config(std::string(BOSS_CONFIG_DIR) + "/example.cfg");
  EXPECT_EQ(ex.config.n_warmup, 8);
  EXPECT_EQ(ex.config.k_candidates, 4);
  EXPECT_EQ(ex.config.distill.alpha, 0.5);
  EXPECT_EQ(ex.seeds.size(), 5u);
}
