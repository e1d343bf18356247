// boss: run, resume, report and compare hyperparameter studies.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "boss/config.hpp"
#include "boss/orchestrator.hpp"
#include "boss/report.hpp"
#include "boss/study_store.hpp"

namespace fs = std::filesystem;
using namespace boss;

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_sigint(int) { g_interrupted.store(true); }

std::string describe(const ParamVector& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? " " : "") << v.names()[i] << "=" << v.values()[i];
  return os.str();
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file);
  out << text;
  if (!out) throw Error("cannot write " + file.string());
}

// Runs or continues a study in `dir`, persisting after every trial.
void drive(StudyState& state, const fs::path& dir) {
  store::EventLog events(dir);
  RunOptions opts;
  opts.cancel = &g_interrupted;
  opts.first_event_seq = events.size();
  opts.on_event = [&](const TrialEvent& ev) { events.append(ev); };
  opts.on_trial = [&](const StudyState& s, const TrialRecord&, const nn::MlpParams*) { store::save(s, dir); };
  TrainData data = build_datasets(state.config.dataset);
  try {
    continue_study(state, data, opts);
  } catch (...) {
    store::save(state, dir);
    throw;
  }
  store::save(state, dir);
  write_text(dir / "curve.csv", report::best_so_far_csv(state));
}

// Exit status for a finished or interrupted run.
int print_outcome(const StudyState& state, const fs::path& dir) {
  if (!state.complete) {
    std::cerr << "interrupted after " << state.trial_log.size() << " trials; resume with: boss resume --study "
              << dir.string() << "\n";
    return 130;
  }
  const Checkpoint* best = state.best();
  if (!best) {
    std::cout << "study complete: every trial failed\n";
    return 0;
  }
  const TrialRecord* rec = nullptr;
  for (const auto& r : state.trial_log)
    if (r.trial_id == best->trial_id) rec = &r;
  std::cout << "best objective " << best->objective << " (trial " << best->trial_id << ")\n";
  if (rec) std::cout << "best params " << describe(rec->params) << "\n";
  return 0;
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::uint64_t from_config) {
  if (flag) return *flag;
  if (const char* env = std::getenv("BOSS_MASTER_SEED")) {
    char* end = nullptr;
    auto v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') throw Error("BOSS_MASTER_SEED is not an unsigned integer: " + std::string(env));
    return v;
  }
  return from_config;
}

MethodKind require_method(const std::string& name) {
  auto m = parse_method(name);
  if (!m) throw Error("unknown method '" + name + "' (expected baseline, random, grid, bo, sd, sd_bo or boss)");
  return *m;
}

std::vector<std::uint64_t> expand_seeds(const std::vector<std::string>& specs) {
  std::vector<std::uint64_t> out;
  for (const auto& s : specs) {
    auto dots = s.find("..");
    try {
      if (dots == std::string::npos) {
        out.push_back(std::stoull(s));
      } else {
        auto lo = std::stoull(s.substr(0, dots)), hi = std::stoull(s.substr(dots + 2));
        if (hi < lo) throw Error("empty seed range '" + s + "'");
        for (auto v = lo; v <= hi; ++v) out.push_back(v);
      }
    } catch (const std::logic_error&) {
      throw Error("bad seed '" + s + "'");
    }
  }
  if (out.empty()) throw Error("no seeds given");
  return out;
}

std::vector<fs::path> study_dirs(const std::vector<std::string>& args) {
  std::vector<fs::path> dirs;
  for (const auto& a : args) {
    fs::path p(a);
    if (fs::exists(p / "study.meta")) {
      dirs.push_back(p);
      continue;
    }
    if (!fs::is_directory(p)) throw Error("no study at " + a);
    std::vector<fs::path> found;
    for (const auto& e : fs::directory_iterator(p))
      if (e.is_directory() && fs::exists(e.path() / "study.meta")) found.push_back(e.path());
    if (found.empty()) throw Error("no study at " + a);
    std::sort(found.begin(), found.end());
    dirs.insert(dirs.end(), found.begin(), found.end());
  }
  return dirs;
}

int cmd_run(const std::string& method_name, const std::string& config_path, std::optional<std::uint64_t> seed,
            const std::string& out_dir, std::optional<int> parallelism) {
  MethodKind method = require_method(method_name);
  auto file = config::load_config(config_path);
  BossConfig cfg = file.config;
  cfg.master_seed = resolve_seed(seed, cfg.master_seed);
  if (parallelism) cfg.parallelism = *parallelism;
  cfg.validate();
  fs::path dir(out_dir);
  if (fs::exists(dir / "study.meta")) throw Error(dir.string() + " already holds a study; use 'boss resume'");
  store::StudyLock lock(dir);
  StudyState state = StudyState::fresh(cfg, method);
  store::save(state, dir);
  drive(state, dir);
  return print_outcome(state, dir);
}

int cmd_resume(const std::string& study) {
  fs::path dir(study);
  StudyState state = store::load(dir);
  if (state.complete) {
    std::cout << "already complete\n";
    return 0;
  }
  store::StudyLock lock(dir);
  drive(state, dir);
  return print_outcome(state, dir);
}

int cmd_report(const std::vector<std::string>& studies, const std::string& format, const std::string& out) {
  if (format != "table" && format != "csv") throw Error("unknown format '" + format + "' (expected table or csv)");
  std::vector<StudyState> states;
  for (const auto& d : study_dirs(studies)) states.push_back(store::load(d));
  std::vector<const StudyState*> ptrs;
  for (const auto& s : states) ptrs.push_back(&s);
  auto table = report::make_report(ptrs);
  std::string text = format == "csv" ? report::format_csv(table) : report::format_table(table);
  if (!out.empty()) write_text(out, text);
  std::cout << text;
  return 0;
}

int cmd_compare(const std::string& config_path, const std::vector<std::string>& method_names,
                const std::vector<std::string>& seed_specs, const std::string& out_dir, std::optional<int> parallelism) {
  std::vector<MethodKind> methods;
  for (const auto& m : method_names) methods.push_back(require_method(m));
  auto file = config::load_config(config_path);
  auto seeds = seed_specs.empty() ? file.seeds : expand_seeds(seed_specs);
  fs::path root(out_dir);
  fs::create_directories(root);
  std::vector<StudyState> states;
  std::vector<std::string> failed;
  for (auto m : methods) {
    for (auto seed : seeds) {
      fs::path dir = root / (std::string(to_string(m)) + "-seed" + std::to_string(seed));
      try {
        if (fs::exists(dir / "study.meta")) throw Error(dir.string() + " already holds a study");
        BossConfig cfg = file.config;
        cfg.master_seed = seed;
        if (parallelism) cfg.parallelism = *parallelism;
        cfg.validate();
        store::StudyLock lock(dir);
        StudyState state = StudyState::fresh(cfg, m);
        store::save(state, dir);
        drive(state, dir);
        if (!state.complete) throw Error("interrupted");
        states.push_back(std::move(state));
      } catch (const std::exception& e) {
        failed.push_back(dir.filename().string() + ": " + e.what());
      }
      if (g_interrupted.load()) break;
    }
    if (g_interrupted.load()) break;
  }
  if (!states.empty()) {
    std::vector<const StudyState*> ptrs;
    for (const auto& s : states) ptrs.push_back(&s);
    auto table = report::make_report(ptrs);
    write_text(root / "report.txt", report::format_table(table));
    write_text(root / "report.csv", report::format_csv(table));
    std::cout << report::format_table(table);
  }
  if (!failed.empty()) {
    std::string msg = "error: " + std::to_string(failed.size()) + " failed cell(s): " + failed.front();
    for (std::size_t i = 1; i < failed.size(); ++i) msg += "; " + failed[i];
    std::cerr << msg << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian optimization with self-distillation across trials"};
  app.require_subcommand(1);

  std::string method, config_path, out_dir, study, format = "table", report_out;
  std::optional<std::uint64_t> seed;
  std::optional<int> parallelism;
  std::vector<std::string> studies, methods, seeds;

  auto* run = app.add_subcommand("run", "run one study");
  run->add_option("--method", method, "baseline|random|grid|bo|sd|sd_bo|boss")->required();
  run->add_option("--config", config_path, "study config file")->required();
  run->add_option("--seed", seed, "master seed (default: $BOSS_MASTER_SEED, then the config's first seed)");
  run->add_option("--out", out_dir, "study directory")->required();
  run->add_option("--parallelism", parallelism, "concurrent trials");

  auto* resume = app.add_subcommand("resume", "continue an interrupted study");
  resume->add_option("--study", study, "study directory")->required();

  auto* rep = app.add_subcommand("report", "summarize finished studies");
  rep->add_option("--studies", studies, "study directories (or directories containing them)")->required();
  rep->add_option("--format", format, "table|csv");
  rep->add_option("--out", report_out, "also write the report to this file");

  auto* cmp = app.add_subcommand("compare", "run methods x seeds and report");
  cmp->add_option("--config", config_path, "study config file")->required();
  cmp->add_option("--methods", methods, "methods to compare")->required();
  cmp->add_option("--seeds", seeds, "seeds, e.g. 1 2 3 or 1..5 (default: the config's seeds)");
  cmp->add_option("--out", out_dir, "output directory")->required();
  cmp->add_option("--parallelism", parallelism, "concurrent trials per study");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  std::signal(SIGINT, on_sigint);
  std::signal(SIGTERM, on_sigint);
  try {
    if (*run) return cmd_run(method, config_path, seed, out_dir, parallelism);
    if (*resume) return cmd_resume(study);
    if (*rep) return cmd_report(studies, format, report_out);
    if (*cmp) return cmd_compare(config_path, methods, seeds, out_dir, parallelism);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
