#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "ctxgate/artifacts.hpp"
#include "ctxgate/suite.hpp"
#include "support.hpp"

namespace ctxgate {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "ctxgate");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path small_ini(const fs::path& dir) {
  const fs::path p = dir / "run.ini";
  std::ofstream(p) << "[run]\nout_dir = " << (dir / "out").string() << "\nseed = 1\n"
                   << "[data]\nn_train = 300\nn_test = 200\nn_pool = 300\n"
                   << "[sft]\nepochs = 1\n[dpo]\nepochs = 1\n"
                   << "[grpo]\nsteps = 2\nrollout_batch = 8\n"
                   << "[suite]\nn_seeds = 1\n";
  return p;
}

TEST(Cli, GenDataWritesReadableSplits) {
  const fs::path dir = testing::scratch_dir("cli_gen");
  const fs::path ini = small_ini(dir);
  const Result r = run({"gen-data", "-c", ini.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* name : {"train.data", "pool.data", "test.data"}) {
    const DatasetFile f = read_dataset(dir / "out" / name);
    const auto again = generate_dataset(f.task, f.instances.front().id);
    ASSERT_EQ(again.size(), f.instances.size());
    for (std::size_t k = 0; k < again.size(); ++k)
      EXPECT_EQ(instance_record(again[k]).str(), instance_record(f.instances[k]).str());
  }
  EXPECT_EQ(read_dataset(dir / "out" / "train.data").instances.size(), 300u);
  EXPECT_TRUE(fs::exists(dir / "out" / "gen-data.config"));
}

TEST(Cli, StagedPipelineProducesEveryArtifact) {
  const fs::path dir = testing::scratch_dir("cli_chain");
  const std::string ini = small_ini(dir).string();
  for (const char* stage : {"gen-data", "sft", "filter", "dpo", "grpo", "eval"}) {
    const Result r = run({stage, "-c", ini});
    ASSERT_EQ(r.code, 0) << stage << ": " << r.err;
  }
  for (const char* name : {"sft.ckpt", "sft.ckpt.meta", "scores.txt", "rl_pool.txt",
                           "pairs.txt", "dpo.ckpt", "grpo.ckpt", "grpo.steps", "grpo.ckpt.eval"})
    EXPECT_TRUE(fs::exists(dir / "out" / name)) << name;
}

TEST(Cli, SuiteIsReproducibleAndReportRerenders) {
  const fs::path dir = testing::scratch_dir("cli_suite");
  const std::string ini = small_ini(dir).string();
  const std::string a = (dir / "a").string(), b = (dir / "b").string();
  ASSERT_EQ(run({"suite", "-c", ini, "--seed", "7", "--out", a}).code, 0);
  ASSERT_EQ(run({"suite", "-c", ini, "--seed", "7", "--out", b}).code, 0);
  for (const char* name : {"report.txt", "suite.records", "series.txt"})
    EXPECT_EQ(slurp(fs::path(a) / name), slurp(fs::path(b) / name)) << name;
  const std::string before = slurp(fs::path(a) / "report.txt");
  ASSERT_EQ(run({"report", "-c", ini, "--out", a}).code, 0);
  EXPECT_EQ(slurp(fs::path(a) / "report.txt"), before);
}

TEST(Cli, SetOverridesConfigValues) {
  const fs::path dir = testing::scratch_dir("cli_set");
  const std::string ini = small_ini(dir).string();
  ASSERT_EQ(run({"gen-data", "-c", ini, "--set", "data.n_train=40"}).code, 0);
  EXPECT_EQ(read_dataset(dir / "out" / "train.data").instances.size(), 40u);
  const Result bad = run({"gen-data", "-c", ini, "--set", "data.bogus=1"});
  EXPECT_NE(bad.code, 0);
  EXPECT_NE(bad.err.find("data.bogus"), std::string::npos);
}

TEST(Cli, MissingConfigFileNamesPath) {
  const Result r = run({"gen-data", "-c", "/nonexistent/cfg.ini"});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("/nonexistent/cfg.ini"), std::string::npos);
}

TEST(Cli, MissingOutputDirectory) {
  const fs::path dir = testing::scratch_dir("cli_noout");
  std::ofstream(dir / "c.ini") << "[run]\nseed = 1\n";
  const Result r = run({"gen-data", "-c", (dir / "c.ini").string()});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("run.out_dir"), std::string::npos);
}

TEST(Cli, UnknownFlagAndSubcommand) {
  const fs::path dir = testing::scratch_dir("cli_flags");
  const std::string ini = small_ini(dir).string();
  EXPECT_NE(run({"gen-data", "-c", ini, "--frobnicate"}).code, 0);
  EXPECT_NE(run({"teleport", "-c", ini}).code, 0);
  EXPECT_NE(run({}).code, 0);
}

TEST(Cli, GrpoWithoutInitCheckpointFails) {
  const fs::path dir = testing::scratch_dir("cli_noinit");
  const std::string ini = small_ini(dir).string();
  ASSERT_EQ(run({"gen-data", "-c", ini}).code, 0);
  const Result r = run({"grpo", "-c", ini});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("sft.ckpt"), std::string::npos);
}

}  // namespace
}  // namespace ctxgate
