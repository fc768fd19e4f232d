#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "venngan/data.hpp"
#include "venngan/training.hpp"

namespace venngan {

/// Raised for unreadable or invalid configs; problems() lists every issue found.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

struct OutputSettings {
  std::string directory;                // may be overridden on the command line
  std::size_t checkpoint_every = 0;     // 0: final checkpoint only
  std::size_t plot_every = 0;           // 0: final plots only
  std::size_t plot_points_per_group = 500;

  friend bool operator==(const OutputSettings&, const OutputSettings&) = default;
};

/// A full experiment: training hyperparameters, the true mixtures, the
/// evaluation cadence and where outputs go. Stored as JSON; the schema is in
/// docs/config.md.
struct ExperimentConfig {
  std::string name = "experiment";
  TrainConfig training;
  GaussianMixtureSpec data = default_illustrative_spec();
  EvalSchedule evaluation;
  OutputSettings output;

  /// Validates every referenced invariant and rejects unknown keys.
  static ExperimentConfig parse(std::string_view json_text);
  static ExperimentConfig load(const std::filesystem::path& path);

  /// Canonical JSON: every field explicit, including derived defaults.
  std::string serialize() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

}  // namespace venngan
