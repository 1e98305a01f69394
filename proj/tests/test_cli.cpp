#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / "softrod_cli_test";
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& args, const fs::path& stdout_file = {}) {
  std::string cmd = std::string(SOFTROD_CLI) + " " + args;
  cmd += stdout_file.empty() ? " > /dev/null" : " > " + stdout_file.string();
  cmd += " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<nlohmann::json> records(const fs::path& p) {
  std::vector<nlohmann::json> out;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) out.push_back(nlohmann::json::parse(line));
  return out;
}

}  // namespace

TEST(Cli, ZeroRolloutWritesOneRecordPerStep) {
  const fs::path out = scratch() / "zero.jsonl";
  ASSERT_EQ(run("rollout --task ik4d --policy zero --episodes 1 --out " + out.string()), 0);
  const auto recs = records(out);
  ASSERT_EQ(recs.size(), 100u);
  EXPECT_EQ(recs.back()["info"]["control_step"], 100);
  EXPECT_TRUE(recs.back()["info"]["truncated"].get<bool>());
}

TEST(Cli, RandomRolloutIsReproducible) {
  const fs::path a = scratch() / "a.jsonl", b = scratch() / "b.jsonl";
  const std::string args = "rollout --task obstacles3d_random --policy random --seed 4 --episodes 2 --envs 2 --out ";
  ASSERT_EQ(run(args + a.string()), 0);
  ASSERT_EQ(run(args + b.string()), 0);
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_EQ(records(a).size(), 80u);
}

TEST(Cli, GoldenActionFileSucceeds) {
  const fs::path out = scratch() / "golden.jsonl";
  const std::string file = std::string(SOFTROD_TEST_DATA) + "/obstacles2d_tight_actions.txt";
  ASSERT_EQ(run("rollout --task obstacles2d_tight --policy " + file + " --out " + out.string()), 0);
  const auto recs = records(out);
  ASSERT_FALSE(recs.empty());
  EXPECT_TRUE(recs.back()["info"]["success"].get<bool>());
  for (const auto& r : recs) EXPECT_LE(r["info"]["max_penetration"].get<double>(), 0.005);
}

TEST(Cli, BenchWritesCsv) {
  const fs::path out = scratch() / "bench.csv";
  ASSERT_EQ(run("bench --tasks follow_target --env-counts 1 --steps 1 --out " + out.string()), 0);
  std::istringstream in(slurp(out));
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "scheme,task,envs,ms_per_vector_step,speedup_vs_explicit,substeps_per_control_step");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, 2);
}

TEST(Cli, CompareWritesReport) {
  const fs::path cfg = scratch() / "short.json";
  std::ofstream(cfg) << R"({"task_params": {"episode_length_noncontact": 5, "episode_length_contact": 2}})";
  const fs::path out = scratch() / "compare.txt";
  ASSERT_EQ(run("compare --config " + cfg.string() +
                " --settle-time 1 --contact-episodes 1 --out " + out.string()),
            0);
  const std::string text = slurp(out);
  EXPECT_NE(text.find("cantilever"), std::string::npos);
  EXPECT_NE(text.find("max_penetration"), std::string::npos);
}

TEST(Cli, ValidatePassesAndReportsToleranceOverride) {
  const fs::path out = scratch() / "validate.txt";
  ASSERT_EQ(run("validate --states 5", out), 0);
  EXPECT_NE(slurp(out).find("all checks passed"), std::string::npos);
  EXPECT_EQ(run("validate --states 5 --gradient-tol 1e-30", out), 1);
  EXPECT_NE(slurp(out).find("tol 1.0e-30"), std::string::npos);
}

TEST(Cli, ConfigErrorsExitWithTwo) {
  const fs::path cfg = scratch() / "bad.json";
  std::ofstream(cfg) << R"({"rod": {"lenght": 1.0}})";
  const fs::path out = scratch() / "bad.txt";
  EXPECT_EQ(run("rollout --config " + cfg.string(), out), 2);
  EXPECT_NE(slurp(out).find("config error"), std::string::npos);
  EXPECT_EQ(run("rollout --task reach"), 2);
}

TEST(Cli, ConfigSubcommandPrintsEffectiveConfig) {
  const fs::path out = scratch() / "effective.json";
  ASSERT_EQ(run("config --task ik4d --seed 3", out), 0);
  const auto j = nlohmann::json::parse(slurp(out));
  EXPECT_EQ(j["task"], "ik4d");
  EXPECT_EQ(j["seed"], 3);
}
