#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const int status = std::system((std::string(DRIVPRIM_CLI_PATH) + " " + args).c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Scratch {
  fs::path dir = fs::temp_directory_path() /
                 ("drivprim_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
  Scratch() {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
};

}  // namespace

TEST(Cli, SynthThenRun) {
  Scratch s;
  const auto corpus = s.dir / "corpus";
  const auto out = s.dir / "out";
  const auto cfg = s.dir / "cfg.json";
  std::ofstream(cfg) << R"({"rescale_l": 8, "hdphmm": {"iterations": 20}, "cluster_k": 3,
                           "sweep": {"k_min": 2, "k_max": 4, "seeds_per_k": 1}})";
  ASSERT_EQ(run("synth --out " + corpus.string() + " --count 4 --duration 12 --seed 3"), 0);
  EXPECT_TRUE(fs::exists(corpus / "enc_000.csv"));
  EXPECT_TRUE(fs::exists(corpus / "enc_000.truth.csv"));
  ASSERT_EQ(run("run --config " + cfg.string() + " --input " + corpus.string() + " --out " + out.string() +
                " --jobs 2"),
            0);
  for (const char* f : {"report.json", "primitives.jsonl", "features.csv", "assignments.csv", "sweep.csv"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  EXPECT_NE(read(out / "report.json").find("\"corpus_size\": 4"), std::string::npos);
}

TEST(Cli, MissingInputReportsIngestStage) {
  Scratch s;
  const auto err = s.dir / "stderr.txt";
  const int code = run("run --input " + (s.dir / "nope").string() + " --out " + (s.dir / "o").string() + " 2> " +
                       err.string());
  EXPECT_NE(code, 0);
  EXPECT_NE(read(err).find("[ingest]"), std::string::npos);
}

TEST(Cli, UnknownSubcommandFails) {
  Scratch s;
  EXPECT_NE(run("frobnicate 2> " + (s.dir / "e.txt").string()), 0);
}
