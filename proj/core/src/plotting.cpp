#include "venngan/plotting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace venngan {

namespace {

constexpr double kCanvasWidth = 680.0;
constexpr double kCanvasHeight = 570.0;
constexpr double kMarkerRadius = 1.6;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string escape(const std::string& text) {
  std::string out;
  for (char ch : text) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::vector<double> ticks(double lo, double hi) {
  const double span = hi - lo;
  const double raw = span / 8.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step) {
    out.push_back(std::abs(t) < 1e-12 ? 0.0 : t);
  }
  return out;
}

}  // namespace

const std::vector<std::string>& region_palette() {
  static const std::vector<std::string> palette = {
      "#1f77b4",  // blue
      "#ff7f0e",  // orange
      "#2ca02c",  // green
      "#8c564b",  // brown
      "#9467bd",  // purple
      "#d62728",  // red
      "#e377c2",  // pink
      "#7f7f7f",  // gray
      "#bcbd22",  // olive
      "#17becf",  // cyan
      "#000080",  // navy
      "#008080",  // teal
      "#800000",  // maroon
  };
  return palette;
}

std::string region_color(std::size_t label) {
  if (label == 0) throw std::invalid_argument("region labels are 1-based");
  const auto& p = region_palette();
  if (label <= 7) return p[label - 1];
  return p[7 + (label - 8) % (p.size() - 7)];
}

void PlotSpec::validate() const {
  const auto& r = range;
  if (!std::isfinite(r.x_min) || !std::isfinite(r.x_max) || !std::isfinite(r.y_min) || !std::isfinite(r.y_max)) {
    throw std::invalid_argument("plot axis range must be finite");
  }
  if (!(r.x_max > r.x_min) || !(r.y_max > r.y_min)) {
    throw std::invalid_argument("plot axis range must be non-degenerate");
  }
  for (const auto& s : sets) {
    if (s.color.empty()) throw std::invalid_argument("point set '" + s.label + "' has no color");
  }
}

PlotTransform::PlotTransform(const AxisRange& range) : range_(range) {}

Point2 PlotTransform::to_pixel(const Point2& p) const {
  const double u = (p[0] - range_.x_min) / (range_.x_max - range_.x_min);
  const double v = (p[1] - range_.y_min) / (range_.y_max - range_.y_min);
  return {kLeft + u * kWidth, kTop + (1.0 - v) * kHeight};
}

Point2 PlotTransform::to_data(const Point2& px) const {
  const double u = (px[0] - kLeft) / kWidth;
  const double v = 1.0 - (px[1] - kTop) / kHeight;
  return {range_.x_min + u * (range_.x_max - range_.x_min), range_.y_min + v * (range_.y_max - range_.y_min)};
}

bool PlotTransform::inside(const Point2& p) const {
  return p[0] >= range_.x_min && p[0] <= range_.x_max && p[1] >= range_.y_min && p[1] <= range_.y_max;
}

std::string render_scatter_svg(const PlotSpec& spec) {
  spec.validate();
  const PlotTransform tf(spec.range);
  const double right = PlotTransform::kLeft + PlotTransform::kWidth;
  const double bottom = PlotTransform::kTop + PlotTransform::kHeight;

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << fmt(kCanvasWidth) << "\" height=\""
      << fmt(kCanvasHeight) << "\" viewBox=\"0 0 " << fmt(kCanvasWidth) << ' ' << fmt(kCanvasHeight) << "\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << fmt(kCanvasWidth) << "\" height=\"" << fmt(kCanvasHeight)
      << "\" fill=\"white\"/>\n";
  if (!spec.title.empty()) {
    svg << "<text x=\"" << fmt(PlotTransform::kLeft + PlotTransform::kWidth / 2) << "\" y=\"24\" "
        << "text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">" << escape(spec.title) << "</text>\n";
  }

  svg << "<g id=\"axes\" stroke=\"black\" stroke-width=\"1\" fill=\"none\">\n"
      << "<rect x=\"" << fmt(PlotTransform::kLeft) << "\" y=\"" << fmt(PlotTransform::kTop) << "\" width=\""
      << fmt(PlotTransform::kWidth) << "\" height=\"" << fmt(PlotTransform::kHeight) << "\"/>\n";
  const auto xt = ticks(spec.range.x_min, spec.range.x_max);
  const auto yt = ticks(spec.range.y_min, spec.range.y_max);
  for (double t : xt) {
    const double x = tf.to_pixel({t, spec.range.y_min})[0];
    svg << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(bottom) << "\" x2=\"" << fmt(x) << "\" y2=\""
        << fmt(bottom + 5) << "\"/>\n";
  }
  for (double t : yt) {
    const double y = tf.to_pixel({spec.range.x_min, t})[1];
    svg << "<line x1=\"" << fmt(PlotTransform::kLeft - 5) << "\" y1=\"" << fmt(y) << "\" x2=\""
        << fmt(PlotTransform::kLeft) << "\" y2=\"" << fmt(y) << "\"/>\n";
  }
  svg << "</g>\n<g id=\"tick-labels\" font-family=\"sans-serif\" font-size=\"11\" fill=\"black\">\n";
  char label[32];
  for (double t : xt) {
    std::snprintf(label, sizeof label, "%g", t);
    svg << "<text x=\"" << fmt(tf.to_pixel({t, spec.range.y_min})[0]) << "\" y=\"" << fmt(bottom + 18)
        << "\" text-anchor=\"middle\">" << label << "</text>\n";
  }
  for (double t : yt) {
    std::snprintf(label, sizeof label, "%g", t);
    svg << "<text x=\"" << fmt(PlotTransform::kLeft - 8) << "\" y=\"" << fmt(tf.to_pixel({spec.range.x_min, t})[1] + 4)
        << "\" text-anchor=\"end\">" << label << "</text>\n";
  }
  svg << "</g>\n";

  svg << "<g id=\"points\">\n";
  for (const auto& set : spec.sets) {
    for (const auto& p : set.points) {
      if (!std::isfinite(p[0]) || !std::isfinite(p[1]) || !tf.inside(p)) continue;
      const auto px = tf.to_pixel(p);
      svg << "<circle class=\"marker\" cx=\"" << fmt(px[0]) << "\" cy=\"" << fmt(px[1]) << "\" r=\""
          << fmt(kMarkerRadius) << "\" fill=\"" << set.color << "\" fill-opacity=\"0.6\"/>\n";
    }
  }
  svg << "</g>\n";

  svg << "<g id=\"legend\" font-family=\"sans-serif\" font-size=\"12\">\n";
  for (std::size_t k = 0; k < spec.sets.size(); ++k) {
    const double y = PlotTransform::kTop + 10.0 + 20.0 * static_cast<double>(k);
    svg << "<rect x=\"" << fmt(right + 20) << "\" y=\"" << fmt(y) << "\" width=\"12\" height=\"12\" fill=\""
        << spec.sets[k].color << "\"/>\n"
        << "<text x=\"" << fmt(right + 38) << "\" y=\"" << fmt(y + 10) << "\">" << escape(spec.sets[k].label)
        << "</text>\n";
  }
  svg << "</g>\n</svg>\n";
  return svg.str();
}

void render_scatter(const PlotSpec& spec) {
  const std::string doc = render_scatter_svg(spec);
  std::ofstream out(spec.output, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write plot to " + spec.output.string());
  out << doc;
  if (!out) throw std::runtime_error("failed writing plot to " + spec.output.string());
}

AxisRange default_axis_range(const GaussianMixtureSpec& data) {
  double extent = 0.0;
  for (const auto& m : data.means) extent = std::max({extent, std::abs(m[0]), std::abs(m[1])});
  const double pad = std::max(0.5, 5.0 * data.stddev());
  const double half = std::ceil((extent + pad) * 2.0) / 2.0;
  return {-half, half, -half, half};
}

ExperimentPlots plot_experiment(const GeneratorBank& generators, const GaussianMixtureSpec& data,
                                const std::filesystem::path& dir, std::size_t iteration, std::size_t points_per_group,
                                Rng& rng) {
  if (points_per_group == 0) throw std::invalid_argument("points_per_group must be at least 1");
  std::filesystem::create_directories(dir);
  const AxisRange range = default_axis_range(data);
  ExperimentPlots paths{dir / (std::to_string(iteration) + "_real.svg"),
                        dir / (std::to_string(iteration) + "_generated.svg")};

  PlotSpec real{"Real data, iteration " + std::to_string(iteration), {}, range, paths.real};
  for (std::size_t i = 0; i < data.layout.num_sets(); ++i) {
    const RealBatch batch = sample_real(data, i, points_per_group, rng);
    PointSet set{"S" + std::to_string(i + 1), region_palette()[i % region_palette().size()], {}};
    for (std::size_t r = 0; r < batch.points.rows(); ++r) set.points.push_back({batch.points(r, 0), batch.points(r, 1)});
    real.sets.push_back(std::move(set));
  }
  render_scatter(real);

  PlotSpec gen{"Generated regions, iteration " + std::to_string(iteration), {}, range, paths.generated};
  for (std::size_t j = 0; j < generators.num_regions(); ++j) {
    const Tensor samples = generators.generate(j, sample_latent(points_per_group, generators.latent_dim(), rng));
    const auto label = data.layout.label(j);
    PointSet set{"r" + std::to_string(label), region_color(label), {}};
    for (std::size_t r = 0; r < samples.rows(); ++r) set.points.push_back({samples(r, 0), samples(r, 1)});
    gen.sets.push_back(std::move(set));
  }
  render_scatter(gen);
  return paths;
}

}  // namespace venngan
