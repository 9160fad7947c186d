#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "lanecheck-cli-test";

int lanecheck(const std::string& args) {
  const std::string cmd = std::string(LANECHECK_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> directory_bytes(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    out[fs::relative(e.path(), dir).string()] = ss.str();
  }
  return out;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
  }
  void TearDown() override { fs::remove_all(kWork); }
  std::string at(const std::string& name) const { return (kWork / name).string(); }
};

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(lanecheck("gen --strength 2 --out " + at("s.csv")), 0);
  EXPECT_EQ(lanecheck(""), 1);
  EXPECT_EQ(lanecheck("frobnicate"), 1);
  EXPECT_EQ(lanecheck("gen --strength nine"), 1);
  EXPECT_EQ(lanecheck("gen --model " + at("missing.json")), 2);
  EXPECT_EQ(lanecheck("compare --tau-offline 1.5 --out " + at("c")), 2);
  EXPECT_EQ(lanecheck("simulate --controller no-such-preset --T 1"), 2);
  EXPECT_EQ(lanecheck("mine --controller curve-weak --budget 5 --out " + at("m/report.json")), 3);
  EXPECT_EQ(lanecheck("mine --controller curve-weak --seed 2024 --out " + at("m/report.json")), 0);
}

TEST_F(Cli, GenFeedsSimulateAndOffline) {
  ASSERT_EQ(lanecheck("gen --strength 1 --seed 4 --out " + at("s.csv")), 0);
  ASSERT_EQ(lanecheck("simulate --scenario " + at("s.csv") + " --id ca1-0001 --controller biased-small --T 5 --out " +
                      at("t.csv")),
            0);
  ASSERT_EQ(lanecheck("offline --sequence " + at("t.csv") + " --controller biased-small --out " + at("o.json")), 0);
  std::ifstream in(at("o.json"));
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_NE(ss.str().find("\"mae\": 0.05"), std::string::npos) << ss.str();
  EXPECT_EQ(lanecheck("simulate --scenario " + at("s.csv") + " --id nope --T 5"), 2);
}

TEST_F(Cli, OutputsIndependentOfJobs) {
  for (const char* jobs : {"1", "8"}) {
    const std::string j(jobs);
    ASSERT_EQ(lanecheck("compare --controller rain-blind --T 20 --seed 3 --keep-traces --jobs " + j + " --out " +
                        at("compare-" + j)),
              0);
    ASSERT_EQ(lanecheck("mine --controller curve-weak --T 20 --seed 3 --jobs " + j + " --out " + at("mine-" + j + "/r.json")),
              0);
    ASSERT_EQ(lanecheck("rq1 --scenarios 20 --seed 3 --jobs " + j + " --out " + at("rq1-" + j)), 0);
  }
  for (const char* what : {"compare-", "mine-", "rq1-"}) {
    const auto a = directory_bytes(kWork / (std::string(what) + "1"));
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, directory_bytes(kWork / (std::string(what) + "8"))) << what;
  }
}

}  // namespace
