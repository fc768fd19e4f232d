#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "venngan/data.hpp"
#include "venngan/networks.hpp"
#include "venngan/rng.hpp"
#include "venngan/tensor.hpp"

namespace venngan {

/// Per-region accuracy of generated samples under the analytic oracle.
struct RegionReport {
  std::vector<std::size_t> region_labels;          // canonical r-numbers
  std::vector<double> accuracy;                    // per region
  double average = 0.0;                            // mean of accuracy
  std::vector<std::vector<std::size_t>> confusion;  // [region][component] counts
  std::vector<double> coverage;                    // per component, 1.0 = one region's worth
  std::size_t samples_per_region = 0;

  /// Component (other than the region's own) receiving most of its samples,
  /// or nullopt when nothing leaked.
  std::optional<std::size_t> top_confused(std::size_t region, const GaussianMixtureSpec& spec) const;
  /// Off-diagonal mass of region's confusion row; equals 1 - accuracy.
  double leakage(std::size_t region, const GaussianMixtureSpec& spec) const;

  friend bool operator==(const RegionReport&, const RegionReport&) = default;
};

/// Maximum-likelihood component per row (nearest mean under the shared
/// isotropic covariance); ties go to the lowest index. Throws
/// std::invalid_argument when the spec fails oracle_separability.
std::vector<std::size_t> oracle_assign(const Tensor& points, const GaussianMixtureSpec& spec);

/// Produces `count` samples of region `region`.
using RegionSampler = std::function<Tensor(std::size_t region, std::size_t count, Rng& rng)>;

inline constexpr std::size_t kDefaultSamplesPerRegion = 10000;

RegionReport region_accuracy(const RegionSampler& sampler, const GaussianMixtureSpec& spec,
                             std::size_t samples_per_region, Rng& rng);
RegionReport region_accuracy(const GeneratorBank& generators, const GaussianMixtureSpec& spec,
                             std::size_t samples_per_region, Rng& rng);

/// Builds the report from oracle labels already assigned to each region's samples.
RegionReport build_report(const GaussianMixtureSpec& spec, std::span<const std::vector<std::size_t>> labels_per_region);

/// Index of the best average accuracy; the earliest wins ties.
std::size_t best_checkpoint(std::span<const RegionReport> reports);
std::size_t best_checkpoint(std::span<const double> averages);

/// CSV with header region,accuracy,top_confused_component.
void write_report_csv(std::ostream& out, const RegionReport& report, const GaussianMixtureSpec& spec);

/// Accuracy table with r1..r7 columns (wider when labels exceed 7), "n/a"
/// for regions absent from the layout, and an Avg column. Percentages.
std::string format_report_table(const RegionReport& report);

}  // namespace venngan
