#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>

#include "venngan/experiment_config.hpp"
#include "venngan/training.hpp"

namespace venngan {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary layout (all integers and floats little-endian):
///   8 bytes   magic "VNNGANCK"
///   u32       format version
///   u64       manifest length in bytes
///   manifest  UTF-8 JSON: version, config echo, iteration, RNG state,
///             optimizer step counts, and {name, rows, cols, offset} per array
///   payload   f64 values of every array, row-major, in manifest order
void save_checkpoint(const std::filesystem::path& path, const ExperimentConfig& config, const TrainState& state);

struct LoadedCheckpoint {
  ExperimentConfig config;
  TrainState state;
};

/// Validates magic, version, array names and shapes against the echoed config.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace venngan
