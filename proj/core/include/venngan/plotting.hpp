#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "venngan/data.hpp"
#include "venngan/networks.hpp"
#include "venngan/rng.hpp"

namespace venngan {

/// Colors for r1..r7: blue, orange, green, brown, purple, red, pink. Labels
/// beyond 7 cycle through gray, olive, cyan, navy, teal, maroon.
const std::vector<std::string>& region_palette();
std::string region_color(std::size_t label);

struct PointSet {
  std::string label;
  std::string color;
  std::vector<Point2> points;
};

struct AxisRange {
  double x_min = -2.0;
  double x_max = 2.0;
  double y_min = -2.0;
  double y_max = 2.0;
};

struct PlotSpec {
  std::string title;
  std::vector<PointSet> sets;
  AxisRange range;
  std::filesystem::path output;

  /// Throws std::invalid_argument on a degenerate/non-finite range or a set
  /// without a color.
  void validate() const;
};

/// Affine data -> pixel map for the plot area (y axis flipped).
class PlotTransform {
 public:
  static constexpr double kLeft = 60.0;
  static constexpr double kTop = 40.0;
  static constexpr double kWidth = 480.0;
  static constexpr double kHeight = 480.0;

  explicit PlotTransform(const AxisRange& range);

  Point2 to_pixel(const Point2& p) const;
  Point2 to_data(const Point2& px) const;
  bool inside(const Point2& p) const;

 private:
  AxisRange range_;
};

/// SVG 1.1 document. One <circle class="marker"> per in-range point; points
/// outside the axis range are dropped.
std::string render_scatter_svg(const PlotSpec& spec);
/// Writes render_scatter_svg(spec) to spec.output. Throws std::runtime_error
/// if the file cannot be written.
void render_scatter(const PlotSpec& spec);

struct ExperimentPlots {
  std::filesystem::path real;
  std::filesystem::path generated;
};

/// Square range covering every mean with room for the spread.
AxisRange default_axis_range(const GaussianMixtureSpec& data);

/// Writes <dir>/<iteration>_real.svg (real samples coloured by set) and
/// <dir>/<iteration>_generated.svg (generated samples coloured by region).
ExperimentPlots plot_experiment(const GeneratorBank& generators, const GaussianMixtureSpec& data,
                                const std::filesystem::path& dir, std::size_t iteration, std::size_t points_per_group,
                                Rng& rng);

}  // namespace venngan
