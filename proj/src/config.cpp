#include "boss/config.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

namespace boss::config {
namespace {

class Parser {
 public:
  explicit Parser(std::string origin) : origin_(std::move(origin)) {}

  [[noreturn]] void fail(const YAML::Node& at, const std::string& what) const {
    std::ostringstream os;
    os << origin_;
    if (at.IsDefined() && at.Mark().line >= 0) os << ':' << at.Mark().line + 1;
    os << ": " << what;
    throw Error(os.str());
  }

  void expect_map(const YAML::Node& n, const std::string& name) const {
    if (!n.IsMap()) fail(n, "section '" + name + "' must be a mapping");
  }

  void only_keys(const YAML::Node& n, const std::string& section, std::initializer_list<const char*> keys) const {
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& kv : n) {
      auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) fail(kv.first, "unknown key '" + key + "' in section '" + section + "'");
    }
  }

  template <typename T>
  void read(const YAML::Node& section, const char* key, T& out) const {
    YAML::Node v = section[key];
    if (!v) return;
    try {
      out = v.as<T>();
    } catch (const YAML::Exception&) {
      fail(v, std::string("bad value for '") + key + "'");
    }
  }

  YAML::Node section(const YAML::Node& root, const char* name) const {
    YAML::Node n = root[name];
    if (!n) fail(root, std::string("missing section '") + name + "'");
    return n;
  }

 private:
  std::string origin_;
};

}  // namespace

StudyConfigFile parse_config(const std::string& text, const std::string& origin) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw Error(origin + ":" + std::to_string(e.mark.line + 1) + ": parse error: " + e.msg);
  }
  Parser p(origin);
  if (!root.IsMap()) p.fail(root, "config must be a mapping of sections");
  p.only_keys(root, "<top level>", {"space", "boss", "tpe", "trainer", "dataset", "baseline", "seeds"});

  StudyConfigFile out;
  BossConfig& c = out.config;

  YAML::Node space = p.section(root, "space");
  if (!space.IsSequence()) p.fail(space, "section 'space' must be a list of parameters");
  std::vector<ParamSpec> params;
  for (const auto& item : space) {
    if (!item.IsMap()) p.fail(item, "space entries must be mappings");
    p.only_keys(item, "space", {"name", "kind", "low", "high"});
    ParamSpec spec;
    std::string kind;
    for (const char* key : {"name", "kind", "low", "high"})
      if (!item[key]) p.fail(item, std::string("space entry missing '") + key + "'");
    p.read(item, "name", spec.name);
    p.read(item, "kind", kind);
    p.read(item, "low", spec.low);
    p.read(item, "high", spec.high);
    auto k = parse_param_kind(kind);
    if (!k) p.fail(item["kind"], "unknown parameter kind '" + kind + "'");
    spec.kind = *k;
    params.push_back(spec);
  }
  c.space = SearchSpace(std::move(params));
  if (auto issues = c.space.validate(); !issues.empty())
    p.fail(space, "invalid space: " + issues.front().param + ": " + issues.front().message);

  YAML::Node boss = p.section(root, "boss");
  p.expect_map(boss, "boss");
  p.only_keys(boss, "boss", {"n_total", "n_warmup", "k_candidates", "alpha", "parallelism", "distill", "temperature"});
  p.read(boss, "n_total", c.n_total);
  p.read(boss, "n_warmup", c.n_warmup);
  p.read(boss, "k_candidates", c.k_candidates);
  p.read(boss, "parallelism", c.parallelism);
  p.read(boss, "alpha", c.distill.alpha);
  p.read(boss, "temperature", c.distill.temperature);
  std::string distill = "mse-logit";
  p.read(boss, "distill", distill);
  if (distill == "mse-logit" || distill == "mse") c.distill.loss = nn::DistillLoss::mse_logit;
  else if (distill == "kl-divergence" || distill == "kl") c.distill.loss = nn::DistillLoss::kl_divergence;
  else p.fail(boss["distill"], "unknown distill kind '" + distill + "'");

  YAML::Node tpe = p.section(root, "tpe");
  p.expect_map(tpe, "tpe");
  p.only_keys(tpe, "tpe", {"gamma", "n_ei_candidates", "n_startup", "bandwidth_floor", "prior_weight"});
  p.read(tpe, "gamma", c.tpe.gamma);
  p.read(tpe, "n_ei_candidates", c.tpe.n_ei_candidates);
  p.read(tpe, "n_startup", c.tpe.n_startup);
  p.read(tpe, "bandwidth_floor", c.tpe.bandwidth_floor);
  p.read(tpe, "prior_weight", c.tpe.prior_weight);

  YAML::Node trainer = p.section(root, "trainer");
  p.expect_map(trainer, "trainer");
  p.only_keys(trainer, "trainer",
              {"epochs", "hidden", "default_lr", "default_momentum", "default_weight_decay", "default_batch"});
  p.read(trainer, "epochs", c.trainer.epochs);
  p.read(trainer, "hidden", c.trainer.hidden);
  p.read(trainer, "default_lr", c.trainer.defaults.learning_rate);
  p.read(trainer, "default_momentum", c.trainer.defaults.momentum);
  p.read(trainer, "default_weight_decay", c.trainer.defaults.weight_decay);
  p.read(trainer, "default_batch", c.trainer.defaults.batch_size);

  YAML::Node ds = p.section(root, "dataset");
  p.expect_map(ds, "dataset");
  p.only_keys(ds, "dataset",
              {"generator", "n_train", "n_val", "d", "classes", "separation", "noise", "noise_ratio", "seed",
               "train_path", "val_path"});
  std::string generator = "blobs", noise = "none";
  p.read(ds, "generator", generator);
  if (generator == "blobs") c.dataset.generator = DataGenerator::blobs;
  else if (generator == "file") c.dataset.generator = DataGenerator::file;
  else p.fail(ds["generator"], "unknown generator '" + generator + "'");
  p.read(ds, "n_train", c.dataset.n_train);
  p.read(ds, "n_val", c.dataset.n_val);
  p.read(ds, "d", c.dataset.dimension);
  p.read(ds, "classes", c.dataset.n_classes);
  p.read(ds, "separation", c.dataset.separation);
  p.read(ds, "noise", noise);
  if (noise == "symmetric") c.dataset.noise = nn::NoiseKind::symmetric;
  else if (noise == "asymmetric") c.dataset.noise = nn::NoiseKind::asymmetric;
  else if (noise == "none") c.dataset.noise.reset();
  else p.fail(ds["noise"], "unknown noise kind '" + noise + "'");
  p.read(ds, "noise_ratio", c.dataset.noise_ratio);
  p.read(ds, "seed", c.dataset.seed);
  p.read(ds, "train_path", c.dataset.train_path);
  p.read(ds, "val_path", c.dataset.val_path);
  if (c.dataset.generator == DataGenerator::file && (c.dataset.train_path.empty() || c.dataset.val_path.empty()))
    p.fail(ds, "generator 'file' needs train_path and val_path");

  if (YAML::Node base = root["baseline"]) {
    p.expect_map(base, "baseline");
    c.baseline.clear();
    for (const auto& kv : base) {
      auto key = kv.first.as<std::string>();
      if (!c.space.index_of(key)) p.fail(kv.first, "baseline names unknown parameter '" + key + "'");
      double v = 0.0;
      try {
        v = kv.second.as<double>();
      } catch (const YAML::Exception&) {
        p.fail(kv.second, "bad value for baseline '" + key + "'");
      }
      c.baseline[key] = v;
    }
  }

  if (YAML::Node seeds = root["seeds"]) {
    if (!seeds.IsSequence() || seeds.size() == 0) p.fail(seeds, "'seeds' must be a non-empty list");
    out.seeds.clear();
    for (const auto& s : seeds) {
      try {
        out.seeds.push_back(s.as<std::uint64_t>());
      } catch (const YAML::Exception&) {
        p.fail(s, "seeds must be non-negative integers");
      }
    }
  }
  c.master_seed = out.seeds.front();

  try {
    c.validate();
  } catch (const Error& e) {
    throw Error(origin + ": " + e.what());
  }
  return out;
}

StudyConfigFile load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str(), path.string());
}

}  // namespace boss::config
