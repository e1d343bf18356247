#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args) {
  std::string cmd = std::string(BOSS_CLI_PATH) + " " + args + " 2>&1";
  Result r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string micro() { return std::string(BOSS_CONFIG_DIR) + "/micro.cfg"; }

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("boss_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Cli, RunWritesStudyAndIsDeterministic) {
  auto a = scratch("a"), b = scratch("b");
  auto ra = run("run --method boss --config " + micro() + " --seed 1 --out " + a.string());
  ASSERT_EQ(ra.code, 0) << ra.out;
  EXPECT_NE(ra.out.find("best"), std::string::npos);
  for (const char* f : {"study.meta", "trials.log", "events.log", "curve.csv"}) EXPECT_TRUE(fs::exists(a / f)) << f;
  auto rb = run("run --method boss --config " + micro() + " --seed 1 --out " + b.string());
  ASSERT_EQ(rb.code, 0) << rb.out;
  EXPECT_EQ(slurp(a / "trials.log"), slurp(b / "trials.log"));

  auto again = run("resume --study " + a.string());
  EXPECT_EQ(again.code, 0);
  EXPECT_NE(again.out.find("already complete"), std::string::npos);

  auto rep = run("report --studies " + a.string() + " " + b.string());
  EXPECT_EQ(rep.code, 0) << rep.out;
  EXPECT_NE(rep.out.find("boss"), std::string::npos);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Cli, UnknownMethodIsRejected) {
  auto r = run("run --method bohb --config " + micro() + " --out " + scratch("x").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("unknown method 'bohb'"), std::string::npos) << r.out;
}

TEST(Cli, BadArgumentsAndMissingFiles) {
  EXPECT_NE(run("run --method boss").code, 0);
  EXPECT_NE(run("frobnicate").code, 0);
  auto r = run("run --method boss --config /nonexistent.cfg --out " + scratch("y").string());
  EXPECT_NE(r.code, 0);
  EXPECT_NE(run("resume --study /nonexistent/study").code, 0);
}

TEST(Cli, CompareSingleSeedHasNoInterval) {
  auto dir = scratch("cmp");
  auto r = run("compare --config " + micro() + " --methods baseline bo boss --seeds 1 --out " + dir.string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("n/a"), std::string::npos) << r.out;
  EXPECT_TRUE(fs::exists(dir / "report.txt"));
  EXPECT_TRUE(fs::exists(dir / "report.csv"));
  EXPECT_TRUE(fs::exists(dir / "boss-seed1" / "trials.log"));
  auto line = [&](const std::string& m) { return r.out.find("\n" + m); };
  EXPECT_LT(line("baseline"), line("bo "));
  EXPECT_LT(line("bo "), line("boss"));
  auto rep = run("report --studies " + dir.string() + " --format csv");
  EXPECT_EQ(rep.code, 0) << rep.out;
  EXPECT_NE(rep.out.find("baseline"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Cli, ResumeFinishesInterruptedStudy) {
  auto full = scratch("full"), part = scratch("part");
  ASSERT_EQ(run("run --method bo --config " + micro() + " --seed 2 --out " + full.string()).code, 0);
  ASSERT_EQ(run("run --method bo --config " + micro() + " --seed 2 --out " + part.string()).code, 0);
  // Drop the last three records to simulate an interruption.
  std::string log = slurp(part / "trials.log");
  std::size_t cut = log.size() - 1;
  for (int i = 0; i < 3; ++i) cut = log.rfind('\n', cut - 1);
  {
    std::ofstream out(part / "trials.log", std::ios::binary | std::ios::trunc);
    out << log.substr(0, cut + 1);
  }
  auto r = run("resume --study " + part.string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(slurp(part / "trials.log"), slurp(full / "trials.log"));
  fs::remove_all(full);
  fs::remove_all(part);
}

TEST(Cli, ResumeOfTruncatedRecordFails) {
  auto dir = scratch("trunc");
  ASSERT_EQ(run("run --method random --config " + micro() + " --seed 3 --out " + dir.string()).code, 0);
  std::string log = slurp(dir / "trials.log");
  {
    std::ofstream out(dir / "trials.log", std::ios::binary | std::ios::trunc);
    out << log.substr(0, log.size() - 4);
  }
  auto r = run("resume --study " + dir.string());
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.out.find("byte offset"), std::string::npos) << r.out;
  fs::remove_all(dir);
}

TEST(Cli, ReportReproducesCompareNumbers) {
  auto dir = scratch("recompute");
  auto r = run("compare --config " + micro() + " --methods random boss --seeds 1..2 --out " + dir.string());
  ASSERT_EQ(r.code, 0) << r.out;
  auto rep = run("report --studies " + dir.string() + " --format csv");
  ASSERT_EQ(rep.code, 0) << rep.out;
  EXPECT_EQ(rep.out, slurp(dir / "report.csv"));
  auto table = run("report --studies " + dir.string());
  EXPECT_EQ(table.out, slurp(dir / "report.txt"));
  fs::remove_all(dir);
}

TEST(Cli, EnvironmentSeedIsUsedWithoutFlag) {
  auto a = scratch("env"), b = scratch("flag");
  ASSERT_EQ(run("run --method bo --config " + micro() + " --seed 5 --out " + b.string()).code, 0);
  ASSERT_EQ(::setenv("BOSS_MASTER_SEED", "5", 1), 0);
  auto r = run("run --method bo --config " + micro() + " --out " + a.string());
  ::unsetenv("BOSS_MASTER_SEED");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(slurp(a / "trials.log"), slurp(b / "trials.log"));
  fs::remove_all(a);
  fs::remove_all(b);
}
