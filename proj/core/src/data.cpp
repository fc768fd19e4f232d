#include "venngan/data.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

namespace venngan {

namespace {

constexpr double kSeparabilityRate = 0.999;
constexpr double kMinSeparationSigmas = 6.0;
constexpr std::uint64_t kSeparabilitySeed = 0x5e9a7ab1e;

double min_pairwise_distance(const std::vector<Point2>& means) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < means.size(); ++a) {
    for (std::size_t b = a + 1; b < means.size(); ++b) {
      best = std::min(best, std::hypot(means[a][0] - means[b][0], means[a][1] - means[b][1]));
    }
  }
  return best;
}

}  // namespace

void GaussianMixtureSpec::validate() const {
  std::vector<std::string> problems;
  if (means.empty()) problems.emplace_back("no mixture components");
  if (!(variance > 0.0) || !std::isfinite(variance)) problems.emplace_back("variance must be positive and finite");
  for (std::size_t c = 0; c < means.size(); ++c) {
    if (!std::isfinite(means[c][0]) || !std::isfinite(means[c][1])) {
      problems.push_back("mean of component " + std::to_string(c) + " is not finite");
    }
  }
  if (region_to_component.size() != layout.num_regions()) {
    problems.push_back("region_to_component has " + std::to_string(region_to_component.size()) +
                       " entries for " + std::to_string(layout.num_regions()) + " regions");
  }
  std::set<std::size_t> used;
  for (std::size_t j = 0; j < region_to_component.size(); ++j) {
    const auto c = region_to_component[j];
    if (c >= means.size()) {
      problems.push_back("region " + std::to_string(j) + " maps to missing component " + std::to_string(c));
    } else if (!used.insert(c).second) {
      problems.push_back("component " + std::to_string(c) + " is assigned to more than one region");
    }
  }
  if (problems.empty() && used.size() != means.size()) {
    problems.emplace_back("every component must be assigned to exactly one region");
  }
  if (!problems.empty()) {
    std::ostringstream msg;
    msg << "invalid Gaussian mixture:";
    for (const auto& p : problems) msg << "\n  - " << p;
    throw std::invalid_argument(msg.str());
  }
}

double GaussianMixtureSpec::stddev() const { return std::sqrt(variance); }

std::vector<std::size_t> GaussianMixtureSpec::set_components(std::size_t set) const {
  std::vector<std::size_t> out;
  for (auto j : layout.set_regions(set)) out.push_back(region_to_component.at(j));
  return out;
}

const std::array<Point2, 7>& default_means() {
  static const std::array<Point2, 7> means = {{
      {-1.0, -1.0},  // r1: S1 only
      {0.0, 1.0},    // r2: S2 only
      {1.0, -1.0},   // r3: S3 only
      {0.0, -1.0},   // r4: S1 and S3
      {1.0, 0.5},    // r5: S2 and S3
      {-1.0, 0.5},   // r6: S1 and S2
      {0.0, 0.0},    // r7: all three
  }};
  return means;
}

double default_variance(const std::vector<Point2>& means) {
  const double spacing = min_pairwise_distance(means);
  for (double variance : {0.1, 0.01, 0.001, 1e-4, 1e-5, 1e-6}) {
    if (spacing < kMinSeparationSigmas * std::sqrt(variance)) continue;
    GaussianMixtureSpec probe{VennLayout::custom(Membership{std::vector<int>(means.size(), 1)}), means, variance, {}};
    for (std::size_t c = 0; c < means.size(); ++c) probe.region_to_component.push_back(c);
    if (oracle_separability(probe)) return variance;
  }
  throw std::invalid_argument("component means are too close to be separated");
}

GaussianMixtureSpec default_spec_for(const VennLayout& layout) {
  GaussianMixtureSpec spec{layout, {}, 0.0, {}};
  for (std::size_t j = 0; j < layout.num_regions(); ++j) {
    const auto label = layout.label(j);
    if (label > default_means().size()) {
      throw std::invalid_argument("no default mean for region label r" + std::to_string(label) +
                                  "; supply means explicitly");
    }
    spec.means.push_back(default_means()[label - 1]);
    spec.region_to_component.push_back(j);
  }
  spec.variance = default_variance(spec.means);
  spec.validate();
  return spec;
}

GaussianMixtureSpec default_illustrative_spec() { return default_spec_for(VennLayout::build(DiagramKind::D2)); }

Tensor sample_component(const GaussianMixtureSpec& spec, std::size_t component, std::size_t batch, Rng& rng) {
  if (component >= spec.num_components()) throw std::out_of_range("component index out of range");
  if (batch == 0) throw std::invalid_argument("batch must be at least 1");
  const double sd = spec.stddev();
  std::vector<double> values(batch * 2);
  for (std::size_t r = 0; r < batch; ++r) {
    values[2 * r] = spec.means[component][0] + sd * rng.normal();
    values[2 * r + 1] = spec.means[component][1] + sd * rng.normal();
  }
  return Tensor(batch, 2, std::move(values));
}

RealBatch sample_real(const GaussianMixtureSpec& spec, std::size_t set, std::size_t batch, Rng& rng) {
  if (batch == 0) throw std::invalid_argument("batch must be at least 1");
  const auto components = spec.set_components(set);
  const double sd = spec.stddev();
  std::vector<double> values(batch * 2);
  std::vector<std::size_t> source(batch);
  for (std::size_t r = 0; r < batch; ++r) {
    const auto c = components[rng.index(components.size())];
    source[r] = c;
    values[2 * r] = spec.means[c][0] + sd * rng.normal();
    values[2 * r + 1] = spec.means[c][1] + sd * rng.normal();
  }
  return {Tensor(batch, 2, std::move(values)), std::move(source)};
}

std::size_t nearest_component(const std::vector<Point2>& means, double x, double y) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < means.size(); ++c) {
    const double dx = x - means[c][0];
    const double dy = y - means[c][1];
    const double d = dx * dx + dy * dy;
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

bool oracle_separability(const GaussianMixtureSpec& spec, std::size_t samples_per_component) {
  Rng rng(kSeparabilitySeed);
  for (std::size_t c = 0; c < spec.num_components(); ++c) {
    const Tensor draws = sample_component(spec, c, samples_per_component, rng);
    std::size_t hits = 0;
    for (std::size_t r = 0; r < draws.rows(); ++r) {
      if (nearest_component(spec.means, draws(r, 0), draws(r, 1)) == c) ++hits;
    }
    if (static_cast<double>(hits) < kSeparabilityRate * static_cast<double>(samples_per_component)) return false;
  }
  return true;
}

void write_samples_csv(std::ostream& out, const RealBatch& batch, std::size_t set) {
  out << "x,y,component,set\n";
  const auto old_precision = out.precision(17);
  for (std::size_t r = 0; r < batch.points.rows(); ++r) {
    out << batch.points(r, 0) << ',' << batch.points(r, 1) << ',' << batch.components[r] << ',' << set << '\n';
  }
  out.precision(old_precision);
}

}  // namespace venngan
