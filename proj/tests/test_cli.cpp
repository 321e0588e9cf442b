#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "test_support.hpp"

using namespace sonarcount;
using sonarcount::testing::TempDir;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int status = -1;
  std::string output;
};

Outcome run(const std::string& args, const fs::path& scratch) {
  const fs::path log = scratch / "cli_output.txt";
  const std::string cmd = std::string("\"") + SONARCOUNT_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int raw = std::system(cmd.c_str());
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string smoke_settings() {
  return " --set dataset.canvas_width=32 --set dataset.canvas_height=32 --set dataset.max_fish=3"
         " --set dataset.max_dolphin=1 --set training.input_size=32 --set training.conv_channels=4,8"
         " --set training.dense_units=16 --set training.batch_size=8 --set training.epochs=2"
         " --set eval.test_images=10 --set eval.repeats=1";
}

}  // namespace

TEST(Cli, FullPipeline) {
  TempDir dir;
  const auto d = [&](const char* name) { return (dir / name).string(); };

  auto r = run("synth-sources --out " + d("src") + " --seed 3", dir.path());
  ASSERT_EQ(r.status, 0) << r.output;
  ASSERT_TRUE(fs::exists(dir / "src" / "annotations.jsonl")) << r.output;

  r = run("extract --annotations " + d("src/annotations.jsonl") + " --images " + d("src") + " --out " + d("bank"),
          dir.path());
  ASSERT_EQ(r.status, 0) << r.output;
  const auto bank = load_bank(dir / "bank");
  EXPECT_EQ(bank.fish.size(), 24u);
  EXPECT_EQ(bank.dolphins.size(), 9u);

  const std::string gen = "generate --bank " + d("bank") + " --seed 11 --set dataset.n_images=30" + smoke_settings();
  r = run(gen + " --workers 1 --out " + d("gen1"), dir.path());
  ASSERT_EQ(r.status, 0) << r.output;
  r = run(gen + " --workers 4 --out " + d("gen4"), dir.path());
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_EQ(slurp(dir / "gen1" / "manifest.jsonl"), slurp(dir / "gen4" / "manifest.jsonl"));
  for (int i = 0; i < 30; ++i) {
    const auto f = scene_filename(static_cast<std::size_t>(i));
    EXPECT_EQ(slurp(dir / "gen1" / f), slurp(dir / "gen4" / f)) << f;
  }
  EXPECT_TRUE(fs::exists(dir / "gen1" / "run.log"));
  EXPECT_EQ(load_manifest(dir / "gen1" / "manifest.jsonl").size(), 30u);

  r = run("train --dataset " + d("gen1") + " --out " + d("train") + smoke_settings(), dir.path());
  ASSERT_EQ(r.status, 0) << r.output;
  ASSERT_TRUE(fs::exists(dir / "train" / "checkpoint.bin"));
  const auto model = load_checkpoint(dir / "train" / "checkpoint.bin");
  EXPECT_EQ(model.architecture().input_size, 32);
  const auto history = slurp(dir / "train" / "history.csv");
  EXPECT_EQ(std::count(history.begin(), history.end(), '\n'), 4);

  r = run("generate --bank " + d("bank") + " --seed 99 --set dataset.n_images=10" + smoke_settings() + " --out " +
              d("test"),
          dir.path());
  ASSERT_EQ(r.status, 0) << r.output;
  r = run("evaluate --dataset " + d("test") + " --checkpoint " + d("train/checkpoint.bin") + " --out " + d("eval") +
              smoke_settings(),
          dir.path());
  ASSERT_EQ(r.status, 0) << r.output;
  const auto summary = nlohmann::json::parse(slurp(dir / "eval" / "eval_summary.json"));
  EXPECT_TRUE(summary["fish"]["mae"].is_number());
  EXPECT_EQ(summary["n_images"].get<int>(), 10);
  const auto residuals = slurp(dir / "eval" / "eval_residuals.csv");
  EXPECT_EQ(std::count(residuals.begin(), residuals.end(), '\n'), 11);

  r = run("sweep --bank " + d("bank") + " --set eval.budgets=10,20 --out " + d("sweep") + smoke_settings(),
          dir.path());
  ASSERT_EQ(r.status, 0) << r.output;
  for (const char* f : {"sweep.csv", "sweep.json", "sweep_fish.svg", "sweep_dolphin.svg", "run.log"})
    EXPECT_TRUE(fs::exists(dir / "sweep" / f)) << f;

  r = run("table --regression " + d("eval/eval_summary.json") + " --classification " + d("eval/eval_summary.json"),
          dir.path());
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_NE(r.output.find("0.133"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("CensusNet (desk)"), std::string::npos) << r.output;
}

TEST(Cli, FailuresExitNonZeroWithMessage) {
  TempDir dir;
  auto r = run("generate --bank " + (dir / "missing").string() + " --out " + (dir / "o").string(), dir.path());
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.output.find("bank"), std::string::npos) << r.output;

  std::ofstream(dir / "bad.ini") << "[dataset]\nmax_fish = lots\n";
  r = run("generate --config " + (dir / "bad.ini").string() + " --out " + (dir / "o").string(), dir.path());
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.output.find("max_fish"), std::string::npos) << r.output;

  r = run("train --dataset " + dir.path().string() + " --out " + (dir / "o").string(), dir.path());
  EXPECT_NE(r.status, 0);

  r = run("no-such-command", dir.path());
  EXPECT_NE(r.status, 0);
}
