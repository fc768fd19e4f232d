#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <unistd.h>

#include "oracles.hpp"
#include "venngan/checkpoint.hpp"
#include "venngan/cli.hpp"

namespace venngan::cli {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::set<fs::path> tree(const fs::path& root) {
  std::set<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) out.insert(fs::relative(e.path(), root));
  return out;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() / ("venngan_cli_" + std::to_string(::getpid()) + "_" +
                                         ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  fs::path write_config(const std::string& name, const std::string& kind, std::size_t iterations,
                        const std::string& extra_training = "") {
    const fs::path path = root_ / (name + ".json");
    std::ofstream(path) << R"({"name": ")" << name << R"(", "seed": 3, "layout": {"kind": ")" << kind << R"("},
      "network": {"latent_dim": 4, "hidden_width": 8, "hidden_layers": 2, "data_dim": 2},
      "training": {"per_region_batch": 4, "iterations": )"
                        << iterations << extra_training << R"(},
      "evaluation": {"every": 2, "samples_per_region": 40},
      "output": {"directory": "cli_test_sentinel_dir", "checkpoint_every": 2, "plot_every": 2,
                 "plot_points_per_group": 20}})";
    return path;
  }

  int train(TrainOptions options) { return cmd_train(options, console_); }

  fs::path root_;
  std::ostringstream out_, err_;
  Console console_{out_, err_, LogLevel::Quiet};
};

TEST_F(Cli, TrainWritesTheRunDirectory) {
  const auto config = write_config("layout", "d1", 4);
  ASSERT_EQ(train({config, {}, root_ / "run", {}}), kExitOk) << err_.str();
  const auto files = tree(root_ / "run");
  for (const char* f : {"config.json", "metrics.csv", "checkpoints/iter_2.ckpt", "checkpoints/iter_4.ckpt",
                        "checkpoints/final.ckpt", "2_real.svg", "2_generated.svg", "4_real.svg", "4_generated.svg"}) {
    EXPECT_TRUE(files.count(f)) << f;
  }
  std::istringstream metrics(slurp(root_ / "run" / "metrics.csv"));
  std::string line;
  std::size_t lines = 0;
  while (std::getline(metrics, line)) ++lines;
  EXPECT_EQ(lines, 5u);
  EXPECT_EQ(load_checkpoint(root_ / "run" / "checkpoints" / "final.ckpt").state.iteration, 4u);
  EXPECT_NE(out_.str().find("finished 4 iterations"), std::string::npos);
  for (const char* svg : {"4_real.svg", "4_generated.svg"}) {
    EXPECT_NO_THROW(testing::parse_svg_markers(slurp(root_ / "run" / svg))) << svg;
  }
}

TEST_F(Cli, SameSeedSameMetrics) {
  const auto config = write_config("det", "d2", 4);
  ASSERT_EQ(train({config, {}, root_ / "a", {}}), kExitOk) << err_.str();
  ASSERT_EQ(train({config, {}, root_ / "b", {}}), kExitOk) << err_.str();
  EXPECT_EQ(slurp(root_ / "a" / "metrics.csv"), slurp(root_ / "b" / "metrics.csv"));
  EXPECT_EQ(slurp(root_ / "a" / "4_generated.svg"), slurp(root_ / "b" / "4_generated.svg"));
  ASSERT_EQ(train({config, {}, root_ / "c", 4}), kExitOk) << err_.str();
  EXPECT_NE(slurp(root_ / "a" / "metrics.csv"), slurp(root_ / "c" / "metrics.csv"));
}

TEST_F(Cli, ResumeReproducesTheUninterruptedRun) {
  const auto full = write_config("full", "d2", 6, R"(, "classifier_weight": 0.1)");
  ASSERT_EQ(train({full, {}, root_ / "straight", {}}), kExitOk) << err_.str();

  const auto half = write_config("half", "d2", 4, R"(, "classifier_weight": 0.1)");
  ASSERT_EQ(train({half, {}, root_ / "split", {}}), kExitOk) << err_.str();
  ASSERT_EQ(train({full, root_ / "split" / "checkpoints" / "final.ckpt", root_ / "split", {}}), kExitOk) << err_.str();

  EXPECT_EQ(slurp(root_ / "split" / "metrics.csv"), slurp(root_ / "straight" / "metrics.csv"));
  const auto a = load_checkpoint(root_ / "straight" / "checkpoints" / "final.ckpt");
  const auto b = load_checkpoint(root_ / "split" / "checkpoints" / "final.ckpt");
  EXPECT_EQ(testing::first_difference(snapshot_values(a.state.generators.parameters()),
                                      snapshot_values(b.state.generators.parameters())),
            "");
  EXPECT_EQ(a.state.ema_shadow, b.state.ema_shadow);
  EXPECT_TRUE(a.state.rng == b.state.rng);
}

TEST_F(Cli, ResumeFromAMidRunCheckpointTruncatesMetrics) {
  const auto config = write_config("mid", "d1", 4);
  ASSERT_EQ(train({config, {}, root_ / "run", {}}), kExitOk) << err_.str();
  const std::string expected = slurp(root_ / "run" / "metrics.csv");
  ASSERT_EQ(train({{}, root_ / "run" / "checkpoints" / "iter_2.ckpt", root_ / "run", {}}), kExitOk) << err_.str();
  EXPECT_EQ(slurp(root_ / "run" / "metrics.csv"), expected);
}

TEST_F(Cli, ResumeWithAMismatchedConfig) {
  const auto config = write_config("orig", "d1", 2);
  ASSERT_EQ(train({config, {}, root_ / "run", {}}), kExitOk) << err_.str();
  const auto other = write_config("other", "d1", 4, R"(, "r1_weight": 0.5)");
  EXPECT_EQ(train({other, root_ / "run" / "checkpoints" / "final.ckpt", root_ / "run", {}}), kExitUsage);
  EXPECT_NE(err_.str().find("/training/r1_weight"), std::string::npos) << err_.str();
  EXPECT_EQ(train({config, root_ / "run" / "checkpoints" / "final.ckpt", root_ / "run", 99}), kExitUsage);
  EXPECT_NE(err_.str().find("/seed"), std::string::npos) << err_.str();
}

TEST_F(Cli, TrainNeedsAConfigOrACheckpoint) {
  EXPECT_EQ(train({}), kExitUsage);
  EXPECT_NE(err_.str().find("--config or --resume"), std::string::npos);
  std::ofstream(root_ / "bad.json") << R"({"layout": {"kind": "d2"}, "bogus": 1})";
  EXPECT_EQ(train({root_ / "bad.json", {}, root_ / "run", {}}), kExitUsage);
  EXPECT_NE(err_.str().find("unknown key 'bogus'"), std::string::npos);
}

TEST_F(Cli, DivergenceHasItsOwnExitCode) {
  const auto config = write_config("boom", "d1", 5, R"(, "learning_rate": 1e305)");
  EXPECT_EQ(train({config, {}, root_ / "run", {}}), kExitDiverged);
  EXPECT_NE(err_.str().find("diverged"), std::string::npos) << err_.str();
}

TEST_F(Cli, EvalOnNestedLayoutMarksAbsentRegions) {
  const auto config = write_config("nested", "d3", 2);
  ASSERT_EQ(train({config, {}, root_ / "run", {}}), kExitOk) << err_.str();
  out_.str("");
  const auto ckpt = root_ / "run" / "checkpoints" / "final.ckpt";
  ASSERT_EQ(cmd_eval({ckpt, 100, root_ / "eval", {}}, console_), kExitOk) << err_.str();
  const std::string printed = out_.str();
  EXPECT_NE(printed.find("n/a"), std::string::npos) << printed;
  EXPECT_NE(printed.find("100 samples per region"), std::string::npos) << printed;
  const std::string csv = slurp(root_ / "eval" / "eval_2.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "region,accuracy,top_confused_component");
  EXPECT_NE(csv.find("\nr7,"), std::string::npos);

  out_.str("");
  ASSERT_EQ(cmd_eval({ckpt, 100, root_ / "eval", {}}, console_), kExitOk);
  EXPECT_EQ(out_.str(), printed);
}

TEST_F(Cli, EvalRejectsBadInputs) {
  const auto config = write_config("inputs", "d1", 2);
  ASSERT_EQ(train({config, {}, root_ / "run", {}}), kExitOk) << err_.str();
  EXPECT_EQ(cmd_eval({root_ / "run" / "checkpoints" / "final.ckpt", 0, root_ / "eval", {}}, console_), kExitUsage);
  EXPECT_NE(err_.str().find("at least 1"), std::string::npos);
  const fs::path missing = root_ / "missing.ckpt";
  EXPECT_EQ(cmd_eval({missing, {}, root_ / "eval", {}}, console_), kExitUsage);
  EXPECT_NE(err_.str().find(missing.string()), std::string::npos);
  EXPECT_EQ(cmd_plot({missing, root_ / "plots", {}, {}}, console_), kExitUsage);
  EXPECT_EQ(cmd_plot({root_ / "run" / "checkpoints" / "final.ckpt", root_ / "plots", 0, {}}, console_), kExitUsage);
}

TEST_F(Cli, PlotIsDeterministic) {
  const auto config = write_config("plots", "d2", 2);
  ASSERT_EQ(train({config, {}, root_ / "run", {}}), kExitOk) << err_.str();
  const auto ckpt = root_ / "run" / "checkpoints" / "final.ckpt";
  ASSERT_EQ(cmd_plot({ckpt, root_ / "p1", 50, {}}, console_), kExitOk) << err_.str();
  ASSERT_EQ(cmd_plot({ckpt, root_ / "p2", 50, {}}, console_), kExitOk) << err_.str();
  for (const char* f : {"2_real.svg", "2_generated.svg"}) {
    EXPECT_EQ(slurp(root_ / "p1" / f), slurp(root_ / "p2" / f)) << f;
    EXPECT_EQ(testing::parse_svg_markers(slurp(root_ / "p1" / f)).size(), std::string(f) == "2_real.svg" ? 150u : 350u);
  }
}

TEST_F(Cli, NothingIsWrittenOutsideTheOutputDirectory) {
  const auto config = write_config("contained", "d1", 2);
  const auto before = tree(root_);
  const auto cwd_before = tree(fs::current_path());
  ASSERT_EQ(train({config, {}, root_ / "run", {}}), kExitOk) << err_.str();
  const auto ckpt = root_ / "run" / "checkpoints" / "final.ckpt";
  ASSERT_EQ(cmd_eval({ckpt, 50, root_ / "run", {}}, console_), kExitOk) << err_.str();
  ASSERT_EQ(cmd_plot({ckpt, root_ / "run", 10, {}}, console_), kExitOk) << err_.str();
  EXPECT_FALSE(fs::exists("cli_test_sentinel_dir"));
  EXPECT_EQ(tree(fs::current_path()), cwd_before);
  auto after = tree(root_);
  for (auto it = after.begin(); it != after.end();) {
    it = it->begin()->string() == "run" ? after.erase(it) : std::next(it);
  }
  EXPECT_EQ(after, before);
}

TEST(CliLogLevel, Parse) {
  EXPECT_EQ(parse_log_level("quiet"), LogLevel::Quiet);
  EXPECT_EQ(parse_log_level("debug"), LogLevel::Debug);
  EXPECT_EQ(parse_log_level("info"), LogLevel::Info);
  EXPECT_EQ(parse_log_level("loud"), LogLevel::Info);
}

}  // namespace
}  // namespace venngan::cli
