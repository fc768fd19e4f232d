#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "venngan/rng.hpp"
#include "venngan/tensor.hpp"
#include "venngan/venn_layout.hpp"

namespace venngan {

using Point2 = std::array<double, 2>;

/// True data distributions as equal mixtures of isotropic Gaussians: set i
/// mixes the components of the regions it contains, one component per region.
struct GaussianMixtureSpec {
  VennLayout layout;
  std::vector<Point2> means;
  double variance = 0.01;  // sigma^2, covariance is variance * I
  std::vector<std::size_t> region_to_component;

  /// Throws std::invalid_argument listing every violated invariant.
  void validate() const;

  std::size_t num_components() const { return means.size(); }
  double stddev() const;
  std::size_t component_of_region(std::size_t region) const { return region_to_component.at(region); }
  /// Components mixed into set i, in region order.
  std::vector<std::size_t> set_components(std::size_t set) const;

  friend bool operator==(const GaussianMixtureSpec&, const GaussianMixtureSpec&) = default;
};

/// Default component means indexed by region label r1..r7. The first three
/// are fixed at (-1,-1), (0,1), (1,-1); the rest sit on the pairwise overlaps
/// and the centre so that every pair is at least 1.0 apart.
const std::array<Point2, 7>& default_means();

/// Largest variance in {0.1, 0.01, ..., 1e-6} for which the means are at
/// least 6 sigma apart and oracle_separability holds.
double default_variance(const std::vector<Point2>& means);

/// Seven components on the d2 layout, region r_j mapped to component j.
GaussianMixtureSpec default_illustrative_spec();
/// Components picked from default_means() by region label.
GaussianMixtureSpec default_spec_for(const VennLayout& layout);

struct RealBatch {
  Tensor points;                      // batch x 2
  std::vector<std::size_t> components;  // source component per row
};

/// Draws from p_data_i: component uniform over the set's components, then a
/// Gaussian draw.
RealBatch sample_real(const GaussianMixtureSpec& spec, std::size_t set, std::size_t batch, Rng& rng);
Tensor sample_component(const GaussianMixtureSpec& spec, std::size_t component, std::size_t batch, Rng& rng);

/// Index of the nearest mean; ties go to the lowest index.
std::size_t nearest_component(const std::vector<Point2>& means, double x, double y);

/// True iff nearest-mean assignment recovers the source component for at
/// least 99.9% of `samples_per_component` draws from every component.
bool oracle_separability(const GaussianMixtureSpec& spec, std::size_t samples_per_component = 10000);

/// CSV with header x,y,component,set.
void write_samples_csv(std::ostream& out, const RealBatch& batch, std::size_t set);

}  // namespace venngan
