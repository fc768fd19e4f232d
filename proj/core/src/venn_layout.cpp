#include "venngan/venn_layout.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace venngan {

namespace {

std::string join(const std::vector<std::string>& items) {
  std::ostringstream out;
  out << "invalid Venn layout:";
  for (const auto& item : items) out << "\n  - " << item;
  return out.str();
}

Matrix uniform_mixture(const Membership& membership) {
  Matrix mixture;
  mixture.reserve(membership.size());
  for (const auto& row : membership) {
    const auto count = static_cast<double>(std::count_if(row.begin(), row.end(), [](int m) { return m != 0; }));
    std::vector<double> weights(row.size(), 0.0);
    if (count > 0) {
      for (std::size_t j = 0; j < row.size(); ++j) weights[j] = row[j] != 0 ? 1.0 / count : 0.0;
    }
    mixture.push_back(std::move(weights));
  }
  return mixture;
}

}  // namespace

std::string_view to_string(DiagramKind kind) {
  switch (kind) {
    case DiagramKind::D1: return "d1";
    case DiagramKind::D2: return "d2";
    case DiagramKind::D3: return "d3";
    case DiagramKind::Custom: return "custom";
  }
  return "custom";
}

DiagramKind parse_diagram_kind(std::string_view text) {
  if (text == "d1") return DiagramKind::D1;
  if (text == "d2") return DiagramKind::D2;
  if (text == "d3") return DiagramKind::D3;
  if (text == "custom") return DiagramKind::Custom;
  throw std::invalid_argument("unknown diagram kind '" + std::string(text) + "' (expected d1, d2, d3 or custom)");
}

LayoutError::LayoutError(std::vector<std::string> violations)
    : std::invalid_argument(join(violations)), violations_(std::move(violations)) {}

VennLayout::VennLayout(DiagramKind kind, Membership membership, Matrix mixture, std::vector<std::size_t> labels)
    : kind_(kind), membership_(std::move(membership)), mixture_(std::move(mixture)), labels_(std::move(labels)) {
  auto problems = violations(membership_, mixture_, labels_);
  if (!problems.empty()) throw LayoutError(std::move(problems));
}

VennLayout VennLayout::build(DiagramKind kind) {
  switch (kind) {
    case DiagramKind::D1: {
      Membership m = {{1, 1, 0}, {0, 1, 1}};
      auto o = uniform_mixture(m);
      return VennLayout(kind, std::move(m), std::move(o), {1, 2, 3});
    }
    case DiagramKind::D2: {
      //            r1 r2 r3 r4 r5 r6 r7
      Membership m = {{1, 0, 0, 1, 0, 1, 1},
                      {0, 1, 0, 0, 1, 1, 1},
                      {0, 0, 1, 1, 1, 0, 1}};
      auto o = uniform_mixture(m);
      return VennLayout(kind, std::move(m), std::move(o), {1, 2, 3, 4, 5, 6, 7});
    }
    case DiagramKind::D3: {
      //            r1 r6 r7
      Membership m = {{1, 1, 1}, {0, 1, 1}, {0, 0, 1}};
      auto o = uniform_mixture(m);
      return VennLayout(kind, std::move(m), std::move(o), {1, 6, 7});
    }
    case DiagramKind::Custom:
      break;
  }
  throw std::invalid_argument("build: the custom kind needs an explicit membership matrix");
}

VennLayout VennLayout::custom(Membership membership, std::optional<Matrix> mixture,
                              std::optional<std::vector<std::size_t>> labels) {
  const std::size_t k = membership.empty() ? 0 : membership.front().size();
  std::vector<std::size_t> lbl;
  if (labels) {
    lbl = std::move(*labels);
  } else {
    lbl.resize(k);
    std::iota(lbl.begin(), lbl.end(), std::size_t{1});
  }
  Matrix o = mixture ? std::move(*mixture) : uniform_mixture(membership);
  return VennLayout(DiagramKind::Custom, std::move(membership), std::move(o), std::move(lbl));
}

std::vector<std::string> VennLayout::violations(const Membership& membership, const Matrix& mixture,
                                                const std::vector<std::size_t>& labels) {
  std::vector<std::string> out;
  if (membership.empty()) {
    out.emplace_back("membership has no sets");
    return out;
  }
  const std::size_t k = membership.front().size();
  if (k == 0) {
    out.emplace_back("membership has no regions");
    return out;
  }
  for (std::size_t i = 0; i < membership.size(); ++i) {
    if (membership[i].size() != k) {
      out.push_back("membership row " + std::to_string(i) + " has " + std::to_string(membership[i].size()) +
                    " entries, expected " + std::to_string(k));
    }
  }
  if (mixture.size() != membership.size()) {
    out.push_back("mixture has " + std::to_string(mixture.size()) + " rows, expected " +
                  std::to_string(membership.size()));
  }
  if (labels.size() != k) {
    out.push_back("expected " + std::to_string(k) + " region labels, got " + std::to_string(labels.size()));
  } else {
    std::set<std::size_t> seen;
    for (auto l : labels) {
      if (l == 0) out.emplace_back("region labels are 1-based; got 0");
      if (!seen.insert(l).second) out.push_back("duplicate region label " + std::to_string(l));
    }
  }
  if (!out.empty()) return out;

  for (std::size_t i = 0; i < membership.size(); ++i) {
    if (mixture[i].size() != k) {
      out.push_back("mixture row " + std::to_string(i) + " has " + std::to_string(mixture[i].size()) +
                    " entries, expected " + std::to_string(k));
      continue;
    }
    double sum = 0.0;
    bool any = false;
    for (std::size_t j = 0; j < k; ++j) {
      const int m = membership[i][j];
      const double o = mixture[i][j];
      if (m != 0 && m != 1) {
        out.push_back("membership[" + std::to_string(i) + "][" + std::to_string(j) + "] must be 0 or 1");
      }
      if (!std::isfinite(o) || o < 0.0) {
        out.push_back("mixture[" + std::to_string(i) + "][" + std::to_string(j) + "] must be finite and nonnegative");
      } else if ((o > 0.0) != (m == 1)) {
        out.push_back("mixture[" + std::to_string(i) + "][" + std::to_string(j) +
                      "] is positive iff the region belongs to the set");
      }
      any = any || m == 1;
      sum += o;
    }
    if (!any) out.push_back("set " + std::to_string(i) + " contains no region");
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "mixture row " << i << " sums to " << sum << ", expected 1";
      out.push_back(msg.str());
    }
  }
  for (std::size_t j = 0; j < k; ++j) {
    const bool used = std::any_of(membership.begin(), membership.end(),
                                  [j](const auto& row) { return j < row.size() && row[j] == 1; });
    if (!used) out.push_back("region " + std::to_string(j) + " belongs to no set");
  }
  return out;
}

std::string VennLayout::region_name(std::size_t region) const { return "r" + std::to_string(label(region)); }

bool VennLayout::has_uniform_weights() const {
  for (std::size_t i = 0; i < num_sets(); ++i) {
    const double expected = 1.0 / static_cast<double>(set_regions(i).size());
    for (std::size_t j = 0; j < num_regions(); ++j) {
      if (contains(i, j) && std::abs(mixture_[i][j] - expected) > kRowSumTolerance) return false;
    }
  }
  return true;
}

std::vector<std::size_t> VennLayout::set_regions(std::size_t set) const {
  if (set >= num_sets()) {
    throw std::out_of_range("set index " + std::to_string(set) + " out of range for " +
                            std::to_string(num_sets()) + " sets");
  }
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < num_regions(); ++j) {
    if (membership_[set][j] == 1) out.push_back(j);
  }
  return out;
}

std::vector<std::size_t> VennLayout::region_sets(std::size_t region) const {
  if (region >= num_regions()) {
    throw std::out_of_range("region index " + std::to_string(region) + " out of range for " +
                            std::to_string(num_regions()) + " regions");
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < num_sets(); ++i) {
    if (membership_[i][region] == 1) out.push_back(i);
  }
  return out;
}

std::map<std::size_t, std::size_t> VennLayout::per_region_batches(std::size_t set, std::size_t per_region) const {
  if (per_region == 0) {
    throw std::invalid_argument("per-region batch size must be at least 1");
  }
  const auto regions = set_regions(set);
  std::map<std::size_t, std::size_t> counts;
  const std::size_t total = per_region * regions.size();

  const double uniform = 1.0 / static_cast<double>(regions.size());
  const bool row_uniform = std::all_of(regions.begin(), regions.end(), [&](std::size_t j) {
    return std::abs(mixture_[set][j] - uniform) <= kRowSumTolerance;
  });
  if (row_uniform) {
    for (auto j : regions) counts[j] = per_region;
    return counts;
  }

  // Largest remainder; ties go to the lower region index.
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (auto j : regions) {
    const double quota = mixture_[set][j] * static_cast<double>(total);
    const auto whole = static_cast<std::size_t>(std::floor(quota + 1e-9));
    counts[j] = whole;
    assigned += whole;
    remainders.emplace_back(quota - static_cast<double>(whole), j);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) counts[remainders[k % remainders.size()].second] += 1;
  while (assigned > total) {
    auto largest = std::max_element(counts.begin(), counts.end(),
                                    [](const auto& a, const auto& b) { return a.second < b.second; });
    largest->second -= 1;
    --assigned;
  }

  // Every member region feeds the discriminator at least once.
  for (auto& [j, c] : counts) {
    if (c == 0) {
      auto donor = std::max_element(counts.begin(), counts.end(),
                                    [](const auto& a, const auto& b) { return a.second < b.second; });
      donor->second -= 1;
      c = 1;
    }
  }
  return counts;
}

Matrix VennLayout::canonical_mixture() const {
  const std::size_t width = *std::max_element(labels_.begin(), labels_.end());
  Matrix out(num_sets(), std::vector<double>(width, 0.0));
  for (std::size_t i = 0; i < num_sets(); ++i) {
    for (std::size_t j = 0; j < num_regions(); ++j) out[i][labels_[j] - 1] = mixture_[i][j];
  }
  return out;
}

}  // namespace venngan
