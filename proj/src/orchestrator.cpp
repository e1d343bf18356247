#include "boss/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <sstream>

#include "boss/worker_pool.hpp"

namespace boss {

std::string_view to_string(MethodKind m) {
  switch (m) {
    case MethodKind::baseline: return "baseline";
    case MethodKind::random: return "random";
    case MethodKind::grid: return "grid";
    case MethodKind::bo: return "bo";
    case MethodKind::sd: return "sd";
    case MethodKind::sd_bo: return "sd_bo";
    case MethodKind::boss: return "boss";
  }
  return "?";
}

std::optional<MethodKind> parse_method(std::string_view text) {
  for (auto m : all_methods)
    if (to_string(m) == text) return m;
  return std::nullopt;
}

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::warmup: return "warmup";
    case Phase::boss: return "boss";
    case Phase::plain: return "plain";
    case Phase::distill: return "distill";
  }
  return "?";
}

std::optional<Phase> parse_phase(std::string_view text) {
  for (auto p : {Phase::warmup, Phase::boss, Phase::plain, Phase::distill})
    if (to_string(p) == text) return p;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Registry and teacher/student selection

void CheckpointRegistry::add(Checkpoint ckpt) {
  if (!std::isfinite(ckpt.objective)) throw Error("checkpoint objective must be finite");
  auto id = ckpt.trial_id;
  if (!by_id_.emplace(id, std::move(ckpt)).second) throw Error("duplicate checkpoint for trial " + std::to_string(id));
}

const Checkpoint* CheckpointRegistry::find(std::int64_t trial_id) const {
  auto it = by_id_.find(trial_id);
  return it == by_id_.end() ? nullptr : &it->second;
}

std::vector<const Checkpoint*> CheckpointRegistry::top_k(std::size_t k) const {
  if (by_id_.empty()) throw Error("top_k: empty checkpoint registry");
  if (k == 0) throw Error("top_k: k must be >= 1");
  std::vector<const Checkpoint*> all;
  all.reserve(by_id_.size());
  for (const auto& [id, c] : by_id_) all.push_back(&c);
  auto better = [](const Checkpoint* a, const Checkpoint* b) {
    if (a->objective != b->objective) return a->objective > b->objective;
    return a->trial_id < b->trial_id;
  };
  k = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), better);
  all.resize(k);
  return all;
}

const Checkpoint* CheckpointRegistry::best() const { return by_id_.empty() ? nullptr : top_k(1).front(); }

TeacherStudent select_teacher_student(const std::vector<const Checkpoint*>& candidates, Rng& rng) {
  if (candidates.empty()) throw Error("select_teacher_student: no candidates");
  if (candidates.size() == 1) return {candidates[0], candidates[0], true};
  const std::size_t n = candidates.size();
  std::size_t t = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  std::size_t s = std::uniform_int_distribution<std::size_t>(0, n - 2)(rng);
  if (s >= t) ++s;
  return {candidates[t], candidates[s], false};
}

// ---------------------------------------------------------------------------
// Config helpers

TrainData build_datasets(const DatasetSpec& spec) {
  TrainData data;
  if (spec.generator == DataGenerator::blobs) {
    auto all = nn::make_blobs(spec.n_train + spec.n_val, spec.dimension, spec.n_classes, spec.separation, spec.seed);
    auto [train, val] = nn::split_rows(all, spec.n_train);
    data.train = std::move(train);
    data.val = std::move(val);
  } else {
    data.train = nn::load_dataset_csv(spec.train_path, spec.n_classes);
    data.val = nn::load_dataset_csv(spec.val_path, spec.n_classes);
    data.train.split = nn::SplitTag::train;
    data.val.split = nn::SplitTag::val;
    if (data.train.dimension() != data.val.dimension() || data.train.n_classes != data.val.n_classes)
      throw Error("train and validation files disagree on shape");
  }
  if (spec.noise && spec.noise_ratio > 0.0)
    data.train = nn::inject_label_noise(data.train, {*spec.noise, spec.noise_ratio, spec.seed});
  return data;
}

void BossConfig::validate() const {
  if (n_total < 1) throw Error("boss.n_total must be >= 1");
  if (!(n_warmup >= 1 && n_warmup < n_total)) throw Error("boss.n_warmup must satisfy 1 <= W < N");
  if (k_candidates < 1) throw Error("boss.k_candidates must be >= 1");
  if (!(parallelism >= 1 && parallelism <= n_total)) throw Error("boss.parallelism must satisfy 1 <= P <= N");
  distill.validate();
  tpe.validate();
  space.require_valid();
  if (trainer.epochs < 0) throw Error("trainer.epochs must be >= 0");
  if (trainer.hidden < 1) throw Error("trainer.hidden must be >= 1");
  if (dataset.generator == DataGenerator::blobs) {
    if (dataset.n_train < 1 || dataset.n_val < 1) throw Error("dataset sizes must be >= 1");
    if (dataset.n_classes < 2) throw Error("dataset.classes must be >= 2");
    if (dataset.dimension < 1) throw Error("dataset.d must be >= 1");
  }
  if (!(dataset.noise_ratio >= 0.0 && dataset.noise_ratio <= 1.0)) throw Error("dataset.noise_ratio must lie in [0, 1]");
}

ParamVector baseline_params(const BossConfig& config) {
  std::vector<std::string> names;
  std::vector<double> values;
  for (const auto& p : config.space.params()) {
    auto it = config.baseline.find(p.name);
    double v = it != config.baseline.end() ? it->second : 0.5 * (p.low + p.high);
    if (p.kind == ParamKind::int_uniform) v = std::round(v);
    names.push_back(p.name);
    values.push_back(std::clamp(v, p.low, p.high));
  }
  return ParamVector(std::move(names), std::move(values));
}

std::vector<ParamVector> grid_points(const SearchSpace& space, int budget) {
  space.require_valid();
  if (budget < 1) throw Error("grid_points: budget must be >= 1");
  const std::size_t d = space.dimension();
  auto base = static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(budget), 1.0 / static_cast<double>(d)) + 1e-9));
  base = std::max<std::size_t>(base, 1);
  std::vector<std::size_t> levels(d, base);
  auto product = [&] {
    double p = 1.0;
    for (auto l : levels) p *= static_cast<double>(l);
    return p;
  };
  for (std::size_t axis = 0; product() < budget; axis = (axis + 1) % d) ++levels[axis];

  std::vector<ParamVector> out;
  std::vector<std::size_t> idx(d, 0);
  while (out.size() < static_cast<std::size_t>(budget)) {
    UnitVector u(d);
    for (std::size_t j = 0; j < d; ++j)
      u[j] = levels[j] == 1 ? 0.5 : static_cast<double>(idx[j]) / static_cast<double>(levels[j] - 1);
    out.push_back(space.from_unit(u));
    // Lexicographic increment, last axis fastest.
    for (std::size_t j = d; j-- > 0;) {
      if (++idx[j] < levels[j]) break;
      idx[j] = 0;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Study state

bool TrialRecord::operator==(const TrialRecord& o) const {
  auto same_obj = [](double a, double b) { return a == b || (std::isinf(a) && std::isinf(b) && (a < 0) == (b < 0)); };
  if (candidates.size() != o.candidates.size()) return false;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    if (candidates[i].point != o.candidates[i].point || candidates[i].score != o.candidates[i].score) return false;
  return trial_id == o.trial_id && phase == o.phase && params == o.params && same_obj(objective, o.objective) &&
         failed == o.failed && failure == o.failure && source == o.source && teacher_id == o.teacher_id &&
         student_init_id == o.student_init_id && degenerate_init == o.degenerate_init && topk_ids == o.topk_ids &&
         obs_set == o.obs_set && snapshot_ids == o.snapshot_ids && chosen == o.chosen;
}

StudyState StudyState::fresh(const BossConfig& config, MethodKind method) {
  config.validate();
  StudyState s;
  s.method = method;
  s.config = config;
  s.primary = tpe::ObservationSet(method == MethodKind::boss ? "warmup" : "search");
  s.secondary = tpe::ObservationSet("boss");
  return s;
}

int StudyState::budget() const { return method == MethodKind::baseline ? 1 : config.n_total; }

double StudyState::best_objective() const {
  const Checkpoint* b = best();
  return b ? b->objective : tpe::failed_objective;
}

void StudyState::apply(TrialRecord record, std::optional<nn::MlpParams> params) {
  for (const auto& r : trial_log)
    if (r.trial_id == record.trial_id) throw Error("trial " + std::to_string(record.trial_id) + " logged twice");
  tpe::ObservationSet* target = &primary;
  if (method == MethodKind::boss && record.phase == Phase::boss) target = &secondary;
  if (method == MethodKind::sd_bo && record.phase == Phase::plain) target = nullptr;
  if (target) target->add({record.params, record.failed ? tpe::failed_objective : record.objective, record.trial_id});
  if (!record.failed) {
    if (!params) throw Error("successful trial " + std::to_string(record.trial_id) + " has no parameters");
    registry.add({record.trial_id, std::move(*params), record.objective, record.phase});
  }
  next_trial_id = std::max(next_trial_id, record.trial_id + 1);
  trial_log.push_back(std::move(record));
}

// ---------------------------------------------------------------------------
// Planning and execution

namespace {

struct TrialInput {
  TrialRecord record;
  std::optional<nn::MlpParams> init;
  std::optional<nn::MlpParams> teacher;
};

struct TrialOutcome {
  TrialRecord record;
  std::optional<nn::MlpParams> params;
};

enum class PlanStatus { ready, wait, done };

struct Plan {
  PlanStatus status = PlanStatus::done;
  TrialInput input;
};

// Rounds without a best-objective improvement since the last improvement.
int sd_stale_rounds(const StudyState& s) {
  double best = tpe::failed_objective;
  int stale = 0;
  for (const auto& r : s.trial_log) {
    double obj = r.failed ? tpe::failed_objective : r.objective;
    if (obj > best) {
      best = obj;
      stale = 0;
    } else {
      ++stale;
    }
  }
  return stale;
}

constexpr int sd_patience = 3;

bool finished(const StudyState& s) {
  if (s.next_trial_id > s.budget()) return true;
  return s.method == MethodKind::sd && sd_stale_rounds(s) >= sd_patience;
}

void fill_suggestion(const StudyState& s, const tpe::ObservationSet& obs, TrialRecord& rec, const RunOptions& opts) {
  if (opts.suggest_probe) opts.suggest_probe(rec.trial_id, obs);
  Rng rng = make_rng(s.config.master_seed, static_cast<std::uint64_t>(rec.trial_id), Stream::suggest);
  auto sug = tpe::suggest(obs, s.config.space, s.config.tpe, rng);
  rec.params = sug.params;
  rec.source = sug.from_prior ? "prior" : "tpe";
  rec.obs_set = obs.label();
  rec.snapshot_ids.clear();
  for (const auto& o : obs.observations()) rec.snapshot_ids.push_back(o.trial_id);
  rec.candidates = std::move(sug.candidates);
  rec.chosen = sug.chosen;
}

Plan plan_trial(const StudyState& s, const std::set<std::int64_t>& in_flight, const RunOptions& opts,
                const std::vector<ParamVector>& grid) {
  Plan plan;
  if (finished(s)) return plan;
  const std::int64_t id = s.next_trial_id;
  plan.status = PlanStatus::ready;
  TrialRecord& rec = plan.input.record;
  rec.trial_id = id;
  rec.phase = Phase::plain;

  switch (s.method) {
    case MethodKind::baseline:
      rec.params = baseline_params(s.config);
      rec.source = "fixed";
      break;
    case MethodKind::random: {
      Rng rng = make_rng(s.config.master_seed, static_cast<std::uint64_t>(id), Stream::suggest);
      rec.params = s.config.space.sample_prior(rng);
      rec.source = "prior";
      break;
    }
    case MethodKind::grid:
      rec.params = grid[static_cast<std::size_t>(id - 1)];
      rec.source = "grid";
      break;
    case MethodKind::bo:
      fill_suggestion(s, s.primary, rec, opts);
      break;
    case MethodKind::sd: {
      if (!in_flight.empty()) return {PlanStatus::wait, {}};
      rec.params = baseline_params(s.config);
      rec.source = "fixed";
      // Teacher is the most recent successful round.
      for (auto it = s.trial_log.rbegin(); it != s.trial_log.rend(); ++it) {
        if (it->failed) continue;
        rec.phase = Phase::distill;
        rec.teacher_id = it->trial_id;
        plan.input.teacher = s.registry.find(it->trial_id)->params;
        break;
      }
      break;
    }
    case MethodKind::sd_bo: {
      if (id == 1) {
        rec.params = baseline_params(s.config);
        rec.source = "fixed";
        break;
      }
      if (in_flight.count(1)) return {PlanStatus::wait, {}};
      const Checkpoint* teacher = s.registry.find(1);
      if (!teacher) throw StudyAborted("sd_bo: the teacher trial failed; no teacher to distill from");
      rec.phase = Phase::distill;
      rec.teacher_id = 1;
      plan.input.teacher = teacher->params;
      fill_suggestion(s, s.primary, rec, opts);
      break;
    }
    case MethodKind::boss: {
      if (id <= s.config.n_warmup) {
        rec.phase = Phase::warmup;
        fill_suggestion(s, s.primary, rec, opts);
        break;
      }
      // The distillation phase starts once every warm-up trial has reported.
      if (!in_flight.empty() && *in_flight.begin() <= s.config.n_warmup) return {PlanStatus::wait, {}};
      if (s.registry.empty())
        throw StudyAborted("boss: every warm-up trial failed; no checkpoint to distill from");
      rec.phase = Phase::boss;
      auto top = s.registry.top_k(static_cast<std::size_t>(s.config.k_candidates));
      for (const auto* c : top) rec.topk_ids.push_back(c->trial_id);
      Rng rng = make_rng(s.config.master_seed, static_cast<std::uint64_t>(id), Stream::select);
      auto pick = select_teacher_student(top, rng);
      rec.teacher_id = pick.teacher->trial_id;
      rec.student_init_id = pick.student_init->trial_id;
      rec.degenerate_init = pick.degenerate;
      plan.input.teacher = pick.teacher->params;
      plan.input.init = pick.student_init->params;
      fill_suggestion(s, s.secondary, rec, opts);
      break;
    }
  }
  return plan;
}

TrialOutcome execute_trial(const TrialInput& in, const BossConfig& cfg, const TrainData& data) {
  TrialOutcome out{in.record, std::nullopt};
  TrialRecord& rec = out.record;
  try {
    const auto id = static_cast<std::uint64_t>(rec.trial_id);
    nn::MlpShape shape{data.train.dimension(), cfg.trainer.hidden, static_cast<std::size_t>(data.train.n_classes)};
    nn::MlpParams init;
    if (in.init) {
      init = *in.init;
    } else {
      Rng rng = make_rng(cfg.master_seed, id, Stream::init);
      init = nn::init_params(shape, rng);
    }
    auto tc = nn::train_config_from(rec.params, cfg.trainer.defaults, cfg.trainer.epochs,
                                    derive_seed(cfg.master_seed, id, Stream::shuffle), data.train.size());
    std::optional<nn::TeacherSpec> teacher;
    if (in.teacher) teacher = nn::TeacherSpec{&*in.teacher, cfg.distill};
    auto result = nn::train(data.train, data.val, tc, init, teacher);
    if (result.failed) {
      rec.failed = true;
      rec.failure = result.failure;
      rec.objective = tpe::failed_objective;
    } else {
      rec.objective = result.val_accuracy;
      out.params = std::move(result.params);
    }
  } catch (const std::exception& e) {
    rec.failed = true;
    rec.failure = std::string("worker error: ") + e.what();
    rec.objective = tpe::failed_objective;
    out.params.reset();
  }
  return out;
}

}  // namespace

void continue_study(StudyState& state, const TrainData& data, const RunOptions& options) {
  state.config.validate();
  const std::size_t P = state.method == MethodKind::sd ? 1 : static_cast<std::size_t>(state.config.parallelism);
  std::vector<ParamVector> grid;
  if (state.method == MethodKind::grid) grid = grid_points(state.config.space, state.config.n_total);

  std::set<std::int64_t> in_flight;
  std::optional<WorkerPool<TrialOutcome>> pool;
  if (P > 1)
    pool.emplace(P, [](std::exception_ptr) -> TrialOutcome {
      TrialOutcome o;
      o.record.failed = true;
      o.record.failure = "worker crashed";
      return o;
    });
  std::deque<TrialOutcome> local_done;
  std::uint64_t seq = options.first_event_seq;
  std::optional<std::string> abort_message;
  bool stopping = false;

  auto emit = [&](TrialEvent ev) {
    ev.seq = seq++;
    ev.running = in_flight.size();
    if (options.on_event) options.on_event(ev);
  };

  for (;;) {
    while (!stopping && in_flight.size() < P) {
      if (options.cancel && options.cancel->load()) {
        stopping = true;
        break;
      }
      if (options.stop_after_trials && state.trial_log.size() + in_flight.size() >= *options.stop_after_trials) {
        stopping = true;
        break;
      }
      Plan plan;
      try {
        plan = plan_trial(state, in_flight, options, grid);
      } catch (const StudyAborted& e) {
        abort_message = e.what();
        stopping = true;
        break;
      }
      if (plan.status != PlanStatus::ready) break;
      const auto id = plan.input.record.trial_id;
      in_flight.insert(id);
      state.next_trial_id = id + 1;
      emit({TrialEvent::Kind::started, 0, id, plan.input.record.phase, nullptr, plan.input.record.params, 0});
      if (pool) {
        pool->submit([in = std::move(plan.input), &cfg = state.config, &data] { return execute_trial(in, cfg, data); });
      } else {
        local_done.push_back(execute_trial(plan.input, state.config, data));
      }
    }
    if (in_flight.empty()) break;

    TrialOutcome out;
    if (pool) {
      out = pool->next_completed();
    } else {
      out = std::move(local_done.front());
      local_done.pop_front();
    }
    const auto id = out.record.trial_id;
    in_flight.erase(id);
    const nn::MlpParams* params_view = nullptr;
    std::optional<nn::MlpParams> params_copy = out.params;
    state.apply(std::move(out.record), std::move(out.params));
    const TrialRecord& logged = state.trial_log.back();
    if (params_copy) params_view = &*params_copy;
    emit({TrialEvent::Kind::finished, 0, id, logged.phase, &logged, logged.params, 0});
    if (options.on_trial) options.on_trial(state, logged, params_view);
  }

  if (abort_message) throw StudyAborted(*abort_message);
  state.complete = finished(state);
}

StudyState run_study(const BossConfig& config, MethodKind method, const RunOptions& options) {
  StudyState state = StudyState::fresh(config, method);
  TrainData data = build_datasets(config.dataset);
  continue_study(state, data, options);
  return state;
}

// ---------------------------------------------------------------------------
// Replay audit

std::vector<std::string> audit_trial_log(const StudyState& state, bool serial) {
  std::vector<std::string> issues;
  auto note = [&](std::int64_t id, const std::string& what) {
    issues.push_back("trial " + std::to_string(id) + ": " + what);
  };
  std::map<std::int64_t, const TrialRecord*> by_id;
  for (const auto& r : state.trial_log) by_id[r.trial_id] = &r;
  std::set<std::int64_t> primary_ids, secondary_ids;
  for (const auto& o : state.primary.observations()) primary_ids.insert(o.trial_id);
  for (const auto& o : state.secondary.observations()) secondary_ids.insert(o.trial_id);

  CheckpointRegistry seen;  // registry as it stood before each record (serial replay)
  for (const auto& rec : state.trial_log) {
    if (rec.source == "prior" || rec.source == "tpe") {
      if (!rec.obs_set.empty()) {
        const auto& members = rec.obs_set == state.secondary.label() ? secondary_ids : primary_ids;
        tpe::ObservationSet snap(rec.obs_set);
        bool ok = true;
        for (auto sid : rec.snapshot_ids) {
          auto it = by_id.find(sid);
          if (it == by_id.end() || !members.count(sid)) {
            note(rec.trial_id, "snapshot references trial " + std::to_string(sid) + " outside set " + rec.obs_set);
            ok = false;
            break;
          }
          const auto* src = it->second;
          snap.add({src->params, src->failed ? tpe::failed_objective : src->objective, sid});
        }
        if (ok) {
          Rng rng = make_rng(state.config.master_seed, static_cast<std::uint64_t>(rec.trial_id), Stream::suggest);
          auto sug = tpe::suggest(snap, state.config.space, state.config.tpe, rng);
          if (!(sug.params == rec.params)) note(rec.trial_id, "replayed suggestion differs from the logged one");
          if (sug.candidates.size() != rec.candidates.size()) {
            note(rec.trial_id, "replayed candidate count differs");
          } else {
            for (std::size_t i = 0; i < sug.candidates.size(); ++i)
              if (sug.candidates[i].score != rec.candidates[i].score) {
                note(rec.trial_id, "replayed candidate score differs");
                break;
              }
          }
        }
      }
    }
    if (rec.phase == Phase::boss) {
      if (!rec.teacher_id || !rec.student_init_id) note(rec.trial_id, "boss trial without teacher/student ids");
      auto in_top = [&](std::optional<std::int64_t> id) {
        return id && std::find(rec.topk_ids.begin(), rec.topk_ids.end(), *id) != rec.topk_ids.end();
      };
      if (!in_top(rec.teacher_id) || !in_top(rec.student_init_id)) note(rec.trial_id, "teacher/student outside top-K");
      if (rec.topk_ids.size() >= 2 && rec.teacher_id == rec.student_init_id)
        note(rec.trial_id, "teacher and student share a checkpoint despite >= 2 candidates");
      if (serial && !seen.empty()) {
        std::vector<std::int64_t> expect;
        for (const auto* c : seen.top_k(static_cast<std::size_t>(state.config.k_candidates)))
          expect.push_back(c->trial_id);
        if (expect != rec.topk_ids) note(rec.trial_id, "logged top-K differs from the registry replay");
      }
    }
    if (rec.phase == Phase::warmup && (rec.teacher_id || rec.student_init_id))
      note(rec.trial_id, "warm-up trial carries a teacher/student id");
    if (!rec.failed) {
      const Checkpoint* c = state.registry.find(rec.trial_id);
      if (!c) {
        note(rec.trial_id, "successful trial missing from the registry");
      } else {
        seen.add({rec.trial_id, c->params, rec.objective, rec.phase});
      }
    }
  }
  return issues;
}

}  // namespace boss
