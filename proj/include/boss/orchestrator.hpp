#pragma once
// Study driver: the two-phase BO + self-distillation loop and the comparison
// methods (baseline, random, grid, bo, sd, sd_bo), run through a worker pool.
//
// Every random draw a trial makes comes from a stream keyed on
// (master seed, trial id, purpose), so a trial's inputs depend only on the
// study state at dispatch time. At parallelism 1 a study is a pure function
// of its config, which is what resume and the replay audit rely on.

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "boss/dataset.hpp"
#include "boss/mlp.hpp"
#include "boss/search_space.hpp"
#include "boss/tpe.hpp"
#include "boss/trainer.hpp"

namespace boss {

enum class MethodKind { baseline, random, grid, bo, sd, sd_bo, boss };

inline constexpr MethodKind all_methods[] = {MethodKind::baseline, MethodKind::random, MethodKind::grid,
                                             MethodKind::bo,       MethodKind::sd,     MethodKind::sd_bo,
                                             MethodKind::boss};

std::string_view to_string(MethodKind m);
std::optional<MethodKind> parse_method(std::string_view text);

// warmup/boss belong to the two-phase method; plain (task loss from random
// init) and distill are used by the comparison methods.
enum class Phase { warmup, boss, plain, distill };
std::string_view to_string(Phase p);
std::optional<Phase> parse_phase(std::string_view text);

struct Checkpoint {
  std::int64_t trial_id = 0;
  nn::MlpParams params;
  double objective = 0.0;
  Phase phase = Phase::warmup;
};

class CheckpointRegistry {
 public:
  // Throws on a duplicate id or non-finite objective.
  void add(Checkpoint ckpt);
  bool empty() const { return by_id_.empty(); }
  std::size_t size() const { return by_id_.size(); }
  const Checkpoint* find(std::int64_t trial_id) const;
  const std::map<std::int64_t, Checkpoint>& all() const { return by_id_; }

  // Up to k best by objective, descending; ties to the lower trial id.
  std::vector<const Checkpoint*> top_k(std::size_t k) const;
  // Exhaustive max; nullptr when empty.
  const Checkpoint* best() const;

 private:
  std::map<std::int64_t, Checkpoint> by_id_;
};

struct TeacherStudent {
  const Checkpoint* teacher = nullptr;
  const Checkpoint* student_init = nullptr;
  bool degenerate = false;  // only one candidate: both roles share it
};

// Two uniform draws without replacement when there are >= 2 candidates.
TeacherStudent select_teacher_student(const std::vector<const Checkpoint*>& candidates, Rng& rng);

enum class DataGenerator { blobs, file };

struct DatasetSpec {
  DataGenerator generator = DataGenerator::blobs;
  std::size_t n_train = 1500;
  std::size_t n_val = 500;
  std::size_t dimension = 10;
  int n_classes = 3;
  double separation = 2.0;
  std::optional<nn::NoiseKind> noise;
  double noise_ratio = 0.0;
  std::uint64_t seed = 7;
  std::string train_path;
  std::string val_path;

  bool operator==(const DatasetSpec&) const = default;
};

struct TrainData {
  nn::Dataset train;  // labels possibly noisy
  nn::Dataset val;    // clean
};

// Generated/loaded data; noise is applied to the training split only.
TrainData build_datasets(const DatasetSpec& spec);

struct TrainerSettings {
  int epochs = 10;
  std::size_t hidden = 32;
  nn::TrainerDefaults defaults;

  bool operator==(const TrainerSettings& o) const {
    return epochs == o.epochs && hidden == o.hidden && defaults.learning_rate == o.defaults.learning_rate &&
           defaults.momentum == o.defaults.momentum && defaults.weight_decay == o.defaults.weight_decay &&
           defaults.batch_size == o.defaults.batch_size;
  }
};

struct BossConfig {
  int n_total = 32;     // N
  int n_warmup = 8;     // W
  int k_candidates = 4; // K
  int parallelism = 1;  // P
  nn::DistillConfig distill;  // distill.alpha is the balance parameter
  tpe::TpeConfig tpe;
  SearchSpace space = default_training_space();
  TrainerSettings trainer;
  DatasetSpec dataset;
  // Hand-tuned configuration used by baseline, sd and the sd_bo teacher.
  std::map<std::string, double> baseline = {{"l", 0.1}, {"m", 0.1}, {"w", 5e-4}, {"b", 128}};
  std::uint64_t master_seed = 1;

  void validate() const;
  bool operator==(const BossConfig&) const = default;
};

// Baseline values clamped into the space (integers rounded).
ParamVector baseline_params(const BossConfig& config);

// Axis-aligned grid of exactly `budget` points: floor(budget^(1/d)) levels per
// axis, bumped one axis at a time until the grid covers the budget, then
// truncated in lexicographic order. Levels are evenly spaced in the unit cube,
// hence geometric on log axes.
std::vector<ParamVector> grid_points(const SearchSpace& space, int budget);

struct TrialRecord {
  std::int64_t trial_id = 0;
  Phase phase = Phase::warmup;
  ParamVector params;
  double objective = tpe::failed_objective;
  bool failed = false;
  std::string failure;
  std::string source;  // prior | tpe | grid | fixed
  std::optional<std::int64_t> teacher_id;
  std::optional<std::int64_t> student_init_id;
  bool degenerate_init = false;
  std::vector<std::int64_t> topk_ids;
  std::string obs_set;                    // observation set the suggestion read
  std::vector<std::int64_t> snapshot_ids; // its members at suggestion time, in order
  std::vector<tpe::Candidate> candidates;
  std::size_t chosen = 0;

  bool operator==(const TrialRecord&) const;
};

struct StudyState {
  MethodKind method = MethodKind::boss;
  BossConfig config;
  tpe::ObservationSet primary{"warmup"};   // Lambda (or the single set)
  tpe::ObservationSet secondary{"boss"};   // Lambda'
  CheckpointRegistry registry;             // Theta
  std::vector<TrialRecord> trial_log;      // completion order
  std::int64_t next_trial_id = 1;
  bool complete = false;

  static StudyState fresh(const BossConfig& config, MethodKind method);

  // Appends a finished trial to the log, its observation set and the
  // registry. Shared by live execution and by reload from disk.
  void apply(TrialRecord record, std::optional<nn::MlpParams> params);

  // Number of training runs the method issues at most.
  int budget() const;
  const Checkpoint* best() const { return registry.best(); }
  double best_objective() const;
};

class StudyAborted : public Error {
 public:
  using Error::Error;
};

struct TrialEvent {
  enum class Kind { started, finished } kind = Kind::started;
  std::uint64_t seq = 0;
  std::int64_t trial_id = 0;
  Phase phase = Phase::warmup;
  const TrialRecord* record = nullptr;  // finished only
  ParamVector params;
  std::size_t running = 0;  // trials in flight after this event
};

struct RunOptions {
  // Stop dispatching once the log holds this many trials.
  std::optional<std::size_t> stop_after_trials;
  const std::atomic<bool>* cancel = nullptr;
  std::function<void(const StudyState&, const TrialRecord&, const nn::MlpParams*)> on_trial;
  std::function<void(const TrialEvent&)> on_event;
  // Called before every suggest with the observation set it reads.
  std::function<void(std::int64_t trial_id, const tpe::ObservationSet&)> suggest_probe;
  std::uint64_t first_event_seq = 0;
};

// Runs trials until the budget is spent, the method stops by itself, or the
// options ask it to stop. Sets state.complete when the study is finished.
void continue_study(StudyState& state, const TrainData& data, const RunOptions& options = {});

StudyState run_study(const BossConfig& config, MethodKind method, const RunOptions& options = {});

// Re-derives every logged suggestion from its logged snapshot and checks the
// teacher/student choices against the logged top-K. With `serial` set, the
// top-K itself is rebuilt from the trials logged before each record. Returns
// one message per discrepancy.
std::vector<std::string> audit_trial_log(const StudyState& state, bool serial);

}  // namespace boss
