#include <gtest/gtest.h>

#include <json.hpp>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

// Runs the CLI with stderr discarded; returns the exit code and stdout.
Result run(const std::string& args) {
  const std::string cmd = std::string(ARC_CLI_PATH) + " " + args + " 2>/dev/null";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("arc_cli_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST(Cli, TabularReportsEqualPolicies) {
  const Result r = run("tabular");
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("task"), "gridworld_pi");
  EXPECT_EQ(j.at("config_hash").get<std::string>().size(), 16u);
  EXPECT_EQ(j.at("seeds").at(0).at("policies_equal"), true);
}

TEST(Cli, UnknownConfigKeyExitsWithTwo) {
  const fs::path d = scratch("unknown_key");
  write(d / "c.json", R"({"task": "snr", "colour": 3})");
  EXPECT_EQ(run("snr --config " + (d / "c.json").string()).code, 2);
}

TEST(Cli, IncompatibleSettingsExitWithTwo) {
  const fs::path d = scratch("incompatible");
  write(d / "c.json", R"({"task": "planar_push", "agent": "sarc", "reward_kind": "env"})");
  EXPECT_EQ(run("train --config " + (d / "c.json").string()).code, 2);
}

TEST(Cli, TaskMustMatchSubcommand) {
  const fs::path d = scratch("mismatch");
  write(d / "c.json", R"({"task": "snr"})");
  EXPECT_EQ(run("theorem2 --config " + (d / "c.json").string()).code, 2);
}

TEST(Cli, BadArgumentsExitWithTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("eval --task nowhere").code, 2);
}

TEST(Cli, WritesArtifactsUnderConfigHash) {
  const fs::path d = scratch("artifacts");
  write(d / "c.json", R"({"task": "snr", "seeds": [3], "hyperparameters": {"n_samples": 10000}})");
  const Result r = run("snr --config " + (d / "c.json").string() + " --out " + (d / "out").string());
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  const fs::path dir = j.at("output_dir").get<std::string>();
  EXPECT_EQ(dir.filename().string(), j.at("config_hash").get<std::string>());
  for (const char* f : {"config.json", "seed_3.csv", "seed_3.json", "summary.json"}) EXPECT_TRUE(fs::exists(dir / f)) << f;
}

TEST(Cli, ExpertEvaluationIsNearZeroOnCar1d) {
  const Result r = run("eval --task car1d --episodes 2");
  ASSERT_EQ(r.code, 0);
  EXPECT_NEAR(nlohmann::json::parse(r.out).at("mean_return").get<double>(), 0.0, 1e-12);
}

TEST(Cli, ExpertGenWritesCsv) {
  const Result r = run("expert-gen --task car1d -n 2");
  ASSERT_EQ(r.code, 0);
  EXPECT_GT(r.out.size(), 0u);
}
