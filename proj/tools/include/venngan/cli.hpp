#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>

namespace venngan::cli {

enum class LogLevel { Quiet, Info, Debug };

/// Reads VENNGAN_LOG (quiet, info, debug); unset or unknown means info.
LogLevel log_level_from_env();
LogLevel parse_log_level(std::string_view text);

struct Console {
  std::ostream& out;
  std::ostream& err;
  LogLevel level = LogLevel::Info;
};

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;      // bad config, bad flags, unreadable inputs
inline constexpr int kExitDiverged = 3;   // a loss turned non-finite
inline constexpr int kExitIo = 4;         // output could not be written

struct TrainOptions {
  std::optional<std::filesystem::path> config;  // optional only when resuming
  std::optional<std::filesystem::path> resume;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
};

struct EvalOptions {
  std::filesystem::path checkpoint;
  std::optional<std::size_t> samples_per_region;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
};

struct PlotOptions {
  std::filesystem::path checkpoint;
  std::optional<std::filesystem::path> out;
  std::optional<std::size_t> points_per_group;
  std::optional<std::uint64_t> seed;
};

/// Output directory layout of a training run:
///   config.json                 canonical config actually used
///   metrics.csv                 one row per iteration
///   checkpoints/iter_<N>.ckpt   periodic checkpoints
///   checkpoints/final.ckpt      state after the last iteration
///   <N>_real.svg, <N>_generated.svg plots
int cmd_train(const TrainOptions& options, Console& console);

/// Prints the region table and writes eval_<iteration>.csv under the output
/// directory (--out, else the directory recorded in the checkpoint).
int cmd_eval(const EvalOptions& options, Console& console);

/// Writes <iteration>_real.svg and <iteration>_generated.svg.
int cmd_plot(const PlotOptions& options, Console& console);

}  // namespace venngan::cli
