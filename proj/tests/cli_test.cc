#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "commands.h"
#include "config.h"
#include "json.hpp"
#include "spdekit/common.h"

namespace spdekit::cli {
namespace {

namespace fs = std::filesystem;

std::string Scratch(const std::string& name) {
  const fs::path p = fs::path(::testing::TempDir()) / ("spdekit_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

std::string Slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int Shell(const std::string& args) {
  const std::string cmd =
      std::string(SPDEKIT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Config, PresetsRoundTrip) {
  for (const std::string& name : PresetNames()) {
    const ExperimentConfig c = Preset(name);
    const nlohmann::json j = ToJson(c);
    const ExperimentConfig back = FromJson(j);
    EXPECT_EQ(ToJson(back), j) << name;
    EXPECT_EQ(ConfigHash(back), ConfigHash(c)) << name;
    EXPECT_EQ(ConfigHash(c).size(), 16u);
  }
}

TEST(Config, HashIgnoresOutputAndThreads) {
  ExperimentConfig a = Preset("heat-m1"), b = a;
  b.out = "/elsewhere";
  b.threads = 7;
  EXPECT_EQ(ConfigHash(a), ConfigHash(b));
  b.seed = a.seed + 1;
  EXPECT_NE(ConfigHash(a), ConfigHash(b));
}

TEST(Config, UnknownKeyNamed) {
  nlohmann::json j = ToJson(Preset("heat-m1"));
  j["drift"]["thetta"] = 0.5;
  try {
    FromJson(j);
    FAIL() << "expected ConfigInvalid";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfigInvalid);
    EXPECT_NE(std::string(e.what()).find("drift.thetta"), std::string::npos);
  }
}

TEST(Config, SeedRequired) {
  nlohmann::json j = ToJson(Preset("heat-m1"));
  j.erase("seed");
  EXPECT_THROW(FromJson(j), Error);
}

TEST(Cli, MalformedConfigExitsTwo) {
  const std::string dir = Scratch("malformed");
  const std::string path = dir + "/bad.json";
  std::ofstream(path) << "{ \"seed\": 1, \"op\": ";
  EXPECT_EQ(Shell("admissible --config " + path + " --out " + dir), kExitConfig);
  EXPECT_EQ(Shell("admissible --preset no-such-preset --out " + dir), kExitConfig);
  EXPECT_EQ(Shell("no-such-command --preset heat-m1 --out " + dir), kExitConfig);
}

TEST(Cli, AdmissibleExitsZero) {
  const std::string dir = Scratch("admissible");
  EXPECT_EQ(Shell("admissible --preset damped-wave-1d --out " + dir), kExitOk);
  const nlohmann::json j = nlohmann::json::parse(Slurp(dir + "/admissible.json"));
  EXPECT_EQ(j["covering"], "damped-wave-1d");
  const nlohmann::json m =
      nlohmann::json::parse(Slurp(dir + "/admissible.manifest.json"));
  EXPECT_EQ(m["config_hash"], ConfigHash(Preset("damped-wave-1d")));
}

TEST(Cli, DeclaredStatementMustCover) {
  ExperimentConfig c = Preset("heat-m3");
  c.op.gamma = 0.7;
  c.out = Scratch("inadmissible");
  EXPECT_EQ(cli::Run("admissible", c).exit_code, kExitInadmissible);
}

TEST(Cli, CounterexampleResiduals) {
  ExperimentConfig c = Preset("counterexample");
  c.out = Scratch("counterexample");
  const RunResult r = cli::Run("counterexample", c);
  ASSERT_EQ(r.exit_code, kExitOk) << r.message;
  std::ifstream in(c.out + "/counterexample.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "# config_hash=" + ConfigHash(c));
  std::getline(in, line);
  EXPECT_EQ(line, "candidate,t,residual");
  double worst = 0.0;
  int rows = 0;
  while (std::getline(in, line)) {
    worst = std::max(worst, std::stod(line.substr(line.rfind(',') + 1)));
    ++rows;
  }
  EXPECT_GT(rows, 0);
  EXPECT_LT(worst, 1e-10);
}

TEST(Cli, UniquenessCsvIndependentOfThreads) {
  ExperimentConfig c = Preset("heat-m1");
  c.samples = 4;
  c.out = Scratch("uniq1");
  c.threads = 1;
  ASSERT_EQ(cli::Run("uniqueness", c).exit_code, kExitOk);
  ExperimentConfig d = c;
  d.out = Scratch("uniq2");
  d.threads = 2;
  ASSERT_EQ(cli::Run("uniqueness", d).exit_code, kExitOk);
  const std::string a = Slurp(c.out + "/uniqueness.csv");
  EXPECT_EQ(a, Slurp(d.out + "/uniqueness.csv"));
  // Hash line, header and one row per ladder level.
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 6);
}

}  // namespace
}  // namespace spdekit::cli
