#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace venngan {

/// The canonical Venn configurations plus a user-supplied one.
///   d1: two overlapping sets, regions (S1 only, S1 and S2, S2 only) = r1, r2, r3
///   d2: three mutually overlapping sets, regions r1..r7
///   d3: three nested sets S3 in S2 in S1, non-empty regions r1, r6, r7
enum class DiagramKind { D1, D2, D3, Custom };

std::string_view to_string(DiagramKind kind);
/// Accepts "d1", "d2", "d3", "custom".
DiagramKind parse_diagram_kind(std::string_view text);

/// Raised when a layout violates its invariants; what() lists every violation.
class LayoutError : public std::invalid_argument {
 public:
  explicit LayoutError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

using Matrix = std::vector<std::vector<double>>;
using Membership = std::vector<std::vector<int>>;

/// Sets, regions, and the row-stochastic mixture matrix O.
///
/// Only non-empty regions are stored, so num_regions() is the number of
/// generators to train. Each region keeps its canonical label (the r-number of
/// the diagram), so a d3 layout has three regions labelled 1, 6 and 7.
/// canonical_mixture() expands O back onto the label columns.
class VennLayout {
 public:
  static constexpr double kRowSumTolerance = 1e-12;

  /// Canonical layout with uniform weights O[i][j] = M[i][j] / |S_i|.
  static VennLayout build(DiagramKind kind);

  /// Custom layout. Without `mixture`, weights are uniform over each set.
  /// Without `labels`, regions are labelled 1..K.
  static VennLayout custom(Membership membership, std::optional<Matrix> mixture = std::nullopt,
                           std::optional<std::vector<std::size_t>> labels = std::nullopt);

  /// Every invariant violated by (membership, mixture, labels); empty if valid.
  static std::vector<std::string> violations(const Membership& membership, const Matrix& mixture,
                                             const std::vector<std::size_t>& labels);

  DiagramKind kind() const { return kind_; }
  std::size_t num_sets() const { return membership_.size(); }
  std::size_t num_regions() const { return labels_.size(); }

  const Membership& membership() const { return membership_; }
  const Matrix& mixture() const { return mixture_; }
  const std::vector<std::size_t>& labels() const { return labels_; }
  std::size_t label(std::size_t region) const { return labels_.at(region); }
  /// "r<label>".
  std::string region_name(std::size_t region) const;

  bool contains(std::size_t set, std::size_t region) const { return membership_.at(set).at(region) != 0; }
  /// True when every row of O is uniform over its support.
  bool has_uniform_weights() const;

  /// Region indices j with M[set][j] = 1, ascending.
  std::vector<std::size_t> set_regions(std::size_t set) const;
  /// Sets that contain `region`, ascending.
  std::vector<std::size_t> region_sets(std::size_t region) const;

  /// Samples to draw from each region of `set` for one discriminator batch.
  /// The union holds per_region * |S_i| samples split proportionally to row
  /// `set` of O (largest-remainder rounding, at least one per member region).
  /// Uniform rows give exactly per_region for every member.
  std::map<std::size_t, std::size_t> per_region_batches(std::size_t set, std::size_t per_region) const;

  /// O expanded to columns r1..r<max label>, zeros for absent labels.
  Matrix canonical_mixture() const;

  friend bool operator==(const VennLayout&, const VennLayout&) = default;

 private:
  VennLayout(DiagramKind kind, Membership membership, Matrix mixture, std::vector<std::size_t> labels);

  DiagramKind kind_ = DiagramKind::Custom;
  Membership membership_;
  Matrix mixture_;
  std::vector<std::size_t> labels_;
};

}  // namespace venngan
