#include "venngan/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace venngan {

namespace {

constexpr std::size_t kChunk = 2000;

}  // namespace

std::optional<std::size_t> RegionReport::top_confused(std::size_t region, const GaussianMixtureSpec& spec) const {
  const auto own = spec.component_of_region(region);
  std::optional<std::size_t> best;
  std::size_t best_count = 0;
  for (std::size_t c = 0; c < confusion.at(region).size(); ++c) {
    if (c == own) continue;
    if (confusion[region][c] > best_count) {
      best_count = confusion[region][c];
      best = c;
    }
  }
  return best;
}

double RegionReport::leakage(std::size_t region, const GaussianMixtureSpec& spec) const {
  const auto own = spec.component_of_region(region);
  std::size_t off = 0;
  for (std::size_t c = 0; c < confusion.at(region).size(); ++c) {
    if (c != own) off += confusion[region][c];
  }
  return static_cast<double>(off) / static_cast<double>(samples_per_region);
}

std::vector<std::size_t> oracle_assign(const Tensor& points, const GaussianMixtureSpec& spec) {
  if (points.cols() != 2) {
    throw ShapeError("oracle_assign expects 2-D points, got " + to_string(points.shape()));
  }
  if (!oracle_separability(spec)) {
    throw std::invalid_argument("oracle_assign: mixture components are not separable enough for the oracle");
  }
  std::vector<std::size_t> labels(points.rows());
  for (std::size_t r = 0; r < points.rows(); ++r) labels[r] = nearest_component(spec.means, points(r, 0), points(r, 1));
  return labels;
}

RegionReport build_report(const GaussianMixtureSpec& spec, std::span<const std::vector<std::size_t>> labels_per_region) {
  const std::size_t k = spec.layout.num_regions();
  if (labels_per_region.size() != k) {
    throw std::invalid_argument("expected labels for " + std::to_string(k) + " regions");
  }
  RegionReport report;
  report.samples_per_region = labels_per_region.empty() ? 0 : labels_per_region.front().size();
  if (report.samples_per_region == 0) {
    throw std::invalid_argument("samples_per_region must be at least 1");
  }
  report.region_labels = spec.layout.labels();
  report.confusion.assign(k, std::vector<std::size_t>(spec.num_components(), 0));
  report.coverage.assign(spec.num_components(), 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    if (labels_per_region[j].size() != report.samples_per_region) {
      throw std::invalid_argument("every region must be evaluated on the same number of samples");
    }
    for (auto c : labels_per_region[j]) report.confusion[j].at(c) += 1;
    const auto own = spec.component_of_region(j);
    report.accuracy.push_back(static_cast<double>(report.confusion[j][own]) /
                              static_cast<double>(report.samples_per_region));
  }
  double total = 0.0;
  for (double a : report.accuracy) total += a;
  report.average = total / static_cast<double>(k);
  for (std::size_t c = 0; c < spec.num_components(); ++c) {
    std::size_t hits = 0;
    for (std::size_t j = 0; j < k; ++j) hits += report.confusion[j][c];
    report.coverage[c] = static_cast<double>(hits) / static_cast<double>(report.samples_per_region);
  }
  return report;
}

RegionReport region_accuracy(const RegionSampler& sampler, const GaussianMixtureSpec& spec,
                             std::size_t samples_per_region, Rng& rng) {
  if (samples_per_region == 0) {
    throw std::invalid_argument("samples_per_region must be at least 1");
  }
  if (!oracle_separability(spec)) {
    throw std::invalid_argument("region_accuracy: mixture components are not separable enough for the oracle");
  }
  std::vector<std::vector<std::size_t>> labels(spec.layout.num_regions());
  for (std::size_t j = 0; j < labels.size(); ++j) {
    labels[j].reserve(samples_per_region);
    for (std::size_t done = 0; done < samples_per_region; done += kChunk) {
      const std::size_t count = std::min(kChunk, samples_per_region - done);
      const Tensor points = sampler(j, count, rng);
      if (points.rows() != count || points.cols() != 2) {
        throw ShapeError("region sampler returned " + to_string(points.shape()));
      }
      for (std::size_t r = 0; r < count; ++r) {
        labels[j].push_back(nearest_component(spec.means, points(r, 0), points(r, 1)));
      }
    }
  }
  return build_report(spec, labels);
}

RegionReport region_accuracy(const GeneratorBank& generators, const GaussianMixtureSpec& spec,
                             std::size_t samples_per_region, Rng& rng) {
  if (generators.num_regions() != spec.layout.num_regions()) {
    throw std::invalid_argument("generator bank and mixture spec disagree on the region count");
  }
  RegionSampler sampler = [&generators](std::size_t region, std::size_t count, Rng& r) {
    return generators.generate(region, sample_latent(count, generators.latent_dim(), r));
  };
  return region_accuracy(sampler, spec, samples_per_region, rng);
}

std::size_t best_checkpoint(std::span<const double> averages) {
  if (averages.empty()) throw std::invalid_argument("best_checkpoint: no reports");
  std::size_t best = 0;
  for (std::size_t k = 1; k < averages.size(); ++k) {
    if (averages[k] > averages[best]) best = k;
  }
  return best;
}

std::size_t best_checkpoint(std::span<const RegionReport> reports) {
  std::vector<double> averages;
  averages.reserve(reports.size());
  for (const auto& r : reports) averages.push_back(r.average);
  return best_checkpoint(averages);
}

void write_report_csv(std::ostream& out, const RegionReport& report, const GaussianMixtureSpec& spec) {
  out << "region,accuracy,top_confused_component\n";
  for (std::size_t j = 0; j < report.accuracy.size(); ++j) {
    char acc[32];
    std::snprintf(acc, sizeof acc, "%.6f", report.accuracy[j]);
    out << 'r' << report.region_labels[j] << ',' << acc << ',';
    if (auto c = report.top_confused(j, spec)) out << *c;
    out << '\n';
  }
}

std::string format_report_table(const RegionReport& report) {
  std::size_t width = 7;
  for (auto l : report.region_labels) width = std::max(width, l);
  std::ostringstream out;
  char cell[32];
  for (std::size_t l = 1; l <= width; ++l) {
    std::snprintf(cell, sizeof cell, "%8s", ("r" + std::to_string(l)).c_str());
    out << cell;
  }
  out << "     Avg\n";
  for (std::size_t l = 1; l <= width; ++l) {
    auto it = std::find(report.region_labels.begin(), report.region_labels.end(), l);
    if (it == report.region_labels.end()) {
      std::snprintf(cell, sizeof cell, "%8s", "n/a");
    } else {
      const auto j = static_cast<std::size_t>(it - report.region_labels.begin());
      std::snprintf(cell, sizeof cell, "%8.2f", 100.0 * report.accuracy[j]);
    }
    out << cell;
  }
  std::snprintf(cell, sizeof cell, "%8.2f", 100.0 * report.average);
  out << cell << '\n';
  return out.str();
}

}  // namespace venngan
