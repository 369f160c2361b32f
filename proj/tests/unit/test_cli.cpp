#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(MTCC_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

struct CliTest : ::testing::Test {
  fs::path dir;
  void SetUp() override {
    dir = fs::temp_directory_path() / ("mtcc_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                       "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream(dir / "tiny.cfg") << "# smoke run\n"
                                       "control_intervals = 8\ncomm_intervals = 4\n"
                                       "episodes_pc = 5\nepisodes_rra = 5\neval_episodes = 2\n"
                                       "pc_hidden = 8, 8\nrra_recurrent_units = 4\nrra_dense_units = 6\n"
                                       "rra_hidden2 = 6\npc_batch = 8\nrra_batch = 8\n";
  }
  void TearDown() override { fs::remove_all(dir); }
};

}  // namespace

TEST_F(CliTest, TrainEvalExport) {
  const auto out = dir / "run";
  ASSERT_EQ(run("train --desk --quiet --config " + (dir / "tiny.cfg").string() + " --algo aoi --seed 4 --out " +
                    out.string(),
                dir / "train.log"),
            0)
      << slurp(dir / "train.log");
  for (const char* f : {"config.txt", "metrics.csv", "trace.csv", "reports.csv", "checkpoint"})
    EXPECT_TRUE(fs::exists(out / f)) << f;
  EXPECT_NE(slurp(out / "config.txt").find("algorithm = aoi"), std::string::npos);

  ASSERT_EQ(run("eval --checkpoint " + (out / "checkpoint").string() + " --episodes 1 --trace --out " +
                    (dir / "ev").string(),
                dir / "eval.log"),
            0)
      << slurp(dir / "eval.log");
  EXPECT_TRUE(fs::exists(dir / "ev" / "trace.csv"));

  ASSERT_EQ(run("trace-export --input " + (out / "trace.csv").string() + " --format jsonl --output " +
                    (dir / "t.jsonl").string(),
                dir / "export.log"),
            0);
  const auto jsonl = slurp(dir / "t.jsonl");
  EXPECT_EQ(jsonl.front(), '{');
  EXPECT_NE(jsonl.find("\"kind\""), std::string::npos);
}

TEST_F(CliTest, RejectsBadInput) {
  EXPECT_NE(run("train --desk --set no_such_key=1 --out " + (dir / "x").string(), dir / "a.log"), 0);
  EXPECT_NE(slurp(dir / "a.log").find("no_such_key"), std::string::npos);
  EXPECT_NE(run("train --desk --set num_vehicles=2 --out " + (dir / "x").string(), dir / "b.log"), 0);
  EXPECT_NE(run("train --desk --algo nope --out " + (dir / "x").string(), dir / "c.log"), 0);
  EXPECT_NE(run("bogus", dir / "d.log"), 0);
}
