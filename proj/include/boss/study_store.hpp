#pragma once
// On-disk study layout:
//
//   <dir>/study.meta      JSON: format header, method, config digest, config, rng cursor
//   <dir>/trials.log      one JSON record per line, append-only, completion order
//   <dir>/ckpt/<id>.bin   parameters: int32 layer count, int32 (rows, cols) per
//                         layer, then every parameter as a float64; all little-endian
//   <dir>/events.log      trial started/finished events, one JSON record per line
//
// study.meta and checkpoints are replaced via write-then-rename; trials.log
// only ever grows.

#include <filesystem>
#include <string>

#include "boss/orchestrator.hpp"
#include "json.hpp"

namespace boss::store {

inline constexpr int format_version = 1;

nlohmann::json config_to_json(const BossConfig& config);
BossConfig config_from_json(const nlohmann::json& j);
// Hex SHA-256 of the canonical (sorted-key, compact) config JSON.
std::string config_digest(const BossConfig& config);

nlohmann::json record_to_json(const TrialRecord& r);
TrialRecord record_from_json(const nlohmann::json& j, const SearchSpace& space);
// The exact bytes appended to trials.log for a record, newline included.
std::string record_line(const TrialRecord& r);

nlohmann::json event_to_json(const TrialEvent& ev);

void write_checkpoint(const std::filesystem::path& file, const nn::MlpParams& params);
nn::MlpParams read_checkpoint(const std::filesystem::path& file);

// Persists `state` under `dir`. Log lines already on disk must be a prefix of
// the state's log; only the missing suffix is appended.
void save(const StudyState& state, const std::filesystem::path& dir);

// Rebuilds the state, including observation sets and registry. Throws
// boss::Error on version/digest mismatch, a truncated or malformed log record
// (with its byte offset), or a dangling checkpoint reference.
StudyState load(const std::filesystem::path& dir);

// Appends events to <dir>/events.log.
class EventLog {
 public:
  explicit EventLog(const std::filesystem::path& dir);
  void append(const TrialEvent& ev);
  // Number of events already in the file.
  std::uint64_t size() const { return count_; }

 private:
  std::filesystem::path file_;
  std::uint64_t count_ = 0;
};

// Exclusive writer lock on a study directory (<dir>/.lock holding the pid).
// A lock left by a dead process is taken over.
class StudyLock {
 public:
  explicit StudyLock(const std::filesystem::path& dir);
  ~StudyLock();
  StudyLock(const StudyLock&) = delete;
  StudyLock& operator=(const StudyLock&) = delete;

 private:
  std::filesystem::path file_;
};

}  // namespace boss::store
