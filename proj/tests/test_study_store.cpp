#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <cmath>
#include <cstring>

#include <unistd.h>

#include "boss/report.hpp"
#include "boss/study_store.hpp"
#include "fixtures.hpp"

using namespace boss;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("boss_store_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << s;
}

StudyState run_saving(const BossConfig& cfg, MethodKind m, const fs::path& dir, std::optional<std::size_t> stop = {}) {
  RunOptions opt;
  opt.stop_after_trials = stop;
  opt.on_trial = [&](const StudyState& s, const TrialRecord&, const nn::MlpParams*) { store::save(s, dir); };
  auto st = StudyState::fresh(cfg, m);
  continue_study(st, build_datasets(cfg.dataset), opt);
  store::save(st, dir);
  return st;
}

}  // namespace

TEST(Store, RoundTripKeepsLogBytes) {
  auto dir = scratch("roundtrip");
  auto cfg = fixture::micro_config(8, 3);
  auto st = run_saving(cfg, MethodKind::boss, dir);
  const std::string log = slurp(dir / "trials.log");
  auto back = store::load(dir);
  EXPECT_EQ(back.method, MethodKind::boss);
  EXPECT_TRUE(back.config == st.config);
  EXPECT_TRUE(back.complete);
  ASSERT_EQ(back.trial_log.size(), st.trial_log.size());
  for (std::size_t i = 0; i < st.trial_log.size(); ++i) EXPECT_TRUE(back.trial_log[i] == st.trial_log[i]) << i;
  for (const auto& [id, c] : st.registry.all()) EXPECT_EQ(back.registry.find(id)->params, c.params);
  EXPECT_EQ(back.primary.size(), st.primary.size());
  EXPECT_EQ(back.secondary.size(), st.secondary.size());
  store::save(back, dir);
  EXPECT_EQ(slurp(dir / "trials.log"), log);
  fs::remove_all(dir);
}

TEST(Store, ResumeMatchesUninterruptedRun) {
  auto cfg = fixture::micro_config(12, 4);
  auto dir_full = scratch("full"), dir_part = scratch("part");
  run_saving(cfg, MethodKind::boss, dir_full);
  auto part = run_saving(cfg, MethodKind::boss, dir_part, 7);
  ASSERT_EQ(part.trial_log.size(), 7u);
  auto resumed = store::load(dir_part);
  EXPECT_FALSE(resumed.complete);
  RunOptions opt;
  opt.on_trial = [&](const StudyState& s, const TrialRecord&, const nn::MlpParams*) { store::save(s, dir_part); };
  continue_study(resumed, build_datasets(resumed.config.dataset), opt);
  store::save(resumed, dir_part);
  EXPECT_EQ(slurp(dir_part / "trials.log"), slurp(dir_full / "trials.log"));
  auto a = store::load(dir_full), b = store::load(dir_part);
  EXPECT_EQ(report::format_table(report::make_report({&a})), report::format_table(report::make_report({&b})));
  for (const auto& [id, c] : a.registry.all()) EXPECT_EQ(b.registry.find(id)->params, c.params);
  fs::remove_all(dir_full);
  fs::remove_all(dir_part);
}

TEST(Store, AppendOnlyKeepsEarlierBytes) {
  auto cfg = fixture::micro_config(8, 3);
  auto dir = scratch("append");
  run_saving(cfg, MethodKind::bo, dir, 4);
  const std::string before = slurp(dir / "trials.log");
  auto st = store::load(dir);
  continue_study(st, build_datasets(cfg.dataset));
  store::save(st, dir);
  const std::string after = slurp(dir / "trials.log");
  ASSERT_GT(after.size(), before.size());
  EXPECT_EQ(after.substr(0, before.size()), before);

  // A diverging state must not overwrite the log.
  auto other = cfg;
  other.master_seed = 999;
  auto foreign = run_study(other, MethodKind::bo);
  EXPECT_THROW(store::save(foreign, dir), Error);
  EXPECT_EQ(slurp(dir / "trials.log"), after);
  fs::remove_all(dir);
}

TEST(Store, RejectsEditedConfig) {
  auto dir = scratch("digest");
  run_saving(fixture::micro_config(6, 2), MethodKind::random, dir);
  auto meta = nlohmann::json::parse(slurp(dir / "study.meta"));
  ASSERT_EQ(meta["config"]["boss"]["n_total"], 6);
  meta["config"]["boss"]["n_total"] = 7;
  spit(dir / "study.meta", meta.dump(2));
  try {
    store::load(dir);
    FAIL() << "edited config accepted";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("digest"), std::string::npos);
  }
  fs::remove_all(dir);
}

TEST(Store, ReportsTruncatedRecordOffset) {
  auto dir = scratch("trunc");
  run_saving(fixture::micro_config(6, 2), MethodKind::random, dir);
  std::string log = slurp(dir / "trials.log");
  const std::size_t first_nl = log.find('\n');
  const std::size_t last_start = log.rfind('\n', log.size() - 2) + 1;
  spit(dir / "trials.log", log.substr(0, log.size() - 5));
  try {
    store::load(dir);
    FAIL() << "truncated log accepted";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("byte offset " + std::to_string(last_start)), std::string::npos) << e.what();
  }
  spit(dir / "trials.log", log.substr(0, first_nl + 1) + "{not json\n");
  try {
    store::load(dir);
    FAIL() << "malformed log accepted";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("byte offset " + std::to_string(first_nl + 1)), std::string::npos) << e.what();
  }
  fs::remove_all(dir);
}

TEST(Store, RejectsVersionMismatch) {
  auto dir = scratch("version");
  run_saving(fixture::micro_config(6, 2), MethodKind::random, dir);
  auto meta = nlohmann::json::parse(slurp(dir / "study.meta"));
  meta["format_version"] = store::format_version + 1;
  spit(dir / "study.meta", meta.dump());
  try {
    store::load(dir);
    FAIL() << "future version accepted";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }
  fs::remove_all(dir);
}

TEST(Store, RejectsDanglingCheckpointReference) {
  auto dir = scratch("dangling");
  run_saving(fixture::micro_config(6, 2), MethodKind::boss, dir);
  auto st = store::load(dir);
  const auto& rec = st.trial_log.back();
  ASSERT_TRUE(rec.teacher_id.has_value());
  fs::remove(dir / "ckpt" / (std::to_string(*rec.teacher_id) + ".bin"));
  EXPECT_THROW(store::load(dir), Error);
  fs::remove_all(dir);
}

TEST(Store, CheckpointBinaryLayout) {
  auto dir = scratch("ckpt");
  Rng rng(5);
  auto p = nn::init_params({3, 4, 2}, rng);
  auto file = dir / "x.bin";
  store::write_checkpoint(file, p);
  const std::string bytes = slurp(file);
  ASSERT_EQ(bytes.size(), 4u * 5 + 8u * p.data().size());
  auto i32 = [&](std::size_t off) {
    std::uint32_t v = 0;
    for (int k = 3; k >= 0; --k) v = (v << 8) | static_cast<unsigned char>(bytes[off + static_cast<std::size_t>(k)]);
    return v;
  };
  EXPECT_EQ(i32(0), 2u);
  EXPECT_EQ(i32(4), 4u);
  EXPECT_EQ(i32(8), 3u);
  EXPECT_EQ(i32(12), 2u);
  EXPECT_EQ(i32(16), 4u);
  std::uint64_t raw = 0;
  for (int k = 7; k >= 0; --k) raw = (raw << 8) | static_cast<unsigned char>(bytes[20 + static_cast<std::size_t>(k)]);
  double first;
  std::memcpy(&first, &raw, 8);
  EXPECT_EQ(first, p.data()[0]);
  EXPECT_EQ(store::read_checkpoint(file), p);
  spit(file, bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(store::read_checkpoint(file), Error);
  fs::remove_all(dir);
}

TEST(Store, FailedTrialsSerializeAsNull) {
  TrialRecord r;
  r.trial_id = 3;
  r.phase = Phase::plain;
  r.params = ParamVector({"l"}, {0.5});
  r.failed = true;
  r.failure = "non-finite loss";
  r.source = "prior";
  auto j = store::record_to_json(r);
  EXPECT_TRUE(j.at("objective").is_null());
  EXPECT_EQ(j.at("status"), "failed");
  SearchSpace s({{"l", ParamKind::uniform_float, 0.0, 1.0}});
  EXPECT_TRUE(store::record_from_json(j, s) == r);
  EXPECT_EQ(store::record_line(r).back(), '\n');
}

TEST(Store, ConfigJsonRoundTrip) {
  auto cfg = fixture::micro_config();
  EXPECT_TRUE(store::config_from_json(store::config_to_json(cfg)) == cfg);
  EXPECT_EQ(store::config_digest(cfg).size(), 64u);
  auto other = cfg;
  other.distill.alpha = 0.25;
  EXPECT_NE(store::config_digest(cfg), store::config_digest(other));
}

TEST(Store, LockIsExclusive) {
  auto dir = scratch("lock");
  {
    store::StudyLock a(dir);
    EXPECT_THROW(store::StudyLock b(dir), Error);
  }
  EXPECT_NO_THROW(store::StudyLock c(dir));
  spit(dir / ".lock", "999999999\n");
  EXPECT_NO_THROW(store::StudyLock d(dir));
  fs::remove_all(dir);
}

TEST(Store, EventLogCountsAcrossReopen) {
  auto dir = scratch("events");
  TrialEvent ev;
  {
    store::EventLog log(dir);
    ev.seq = log.size();
    log.append(ev);
    ev.seq = log.size();
    log.append(ev);
  }
  store::EventLog again(dir);
  EXPECT_EQ(again.size(), 2u);
  fs::remove_all(dir);
}

TEST(Report, HandComputedInterval) {
  auto cfg = fixture::micro_config(6, 2);
  auto half = report::ci95_half_width({0.8, 0.9});
  ASSERT_TRUE(half.has_value());
  EXPECT_NEAR(*half, 1.96 * std::sqrt(0.005) / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(*half, 0.098, 5e-4);
  EXPECT_FALSE(report::ci95_half_width({0.8}).has_value());
  EXPECT_THROW(report::make_report({}), Error);

  std::vector<StudyState> studies;
  for (MethodKind m : {MethodKind::boss, MethodKind::random, MethodKind::baseline}) studies.push_back(run_study(cfg, m));
  std::vector<const StudyState*> ptrs;
  for (const auto& s : studies) ptrs.push_back(&s);
  auto table = report::make_report(ptrs);
  ASSERT_EQ(table.rows.size(), 3u);
  EXPECT_EQ(table.rows[0].method, MethodKind::baseline);
  EXPECT_EQ(table.rows[1].method, MethodKind::random);
  EXPECT_EQ(table.rows[2].method, MethodKind::boss);
  for (const auto& r : table.rows) EXPECT_FALSE(r.half_width.has_value());
  EXPECT_NE(report::format_table(table).find("n/a"), std::string::npos);
  EXPECT_NE(report::format_csv(table).find("baseline"), std::string::npos);
}
