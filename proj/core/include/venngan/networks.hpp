#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "venngan/autodiff.hpp"
#include "venngan/rng.hpp"
#include "venngan/tensor.hpp"

namespace venngan {

enum class OutputActivation { Linear, Tanh };

/// Fully connected stack. Hidden layers use leaky_relu(0.2); the last layer
/// is linear or tanh.
struct MlpSpec {
  std::vector<std::size_t> widths;
  OutputActivation output = OutputActivation::Linear;

  /// Throws std::invalid_argument unless there are >= 2 positive widths.
  void validate() const;
  std::size_t input_width() const { return widths.front(); }
  std::size_t output_width() const { return widths.back(); }
  std::size_t hidden_layer_count() const { return widths.size() - 2; }
};

struct NamedParameter {
  std::string name;
  ad::NodePtr node;
};
using ParameterList = std::vector<NamedParameter>;

std::size_t count_scalars(const ParameterList& params);
/// Deep copy of the current values, in list order.
std::vector<Tensor> snapshot_values(const ParameterList& params);
void zero_grads(const ParameterList& params);

/// Per-hidden-layer feature scale and shift applied after the affine map and
/// before the activation.
struct Modulation {
  ad::NodePtr scale;
  ad::NodePtr shift;
};

class Mlp {
 public:
  /// Weights and biases drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  Mlp(MlpSpec spec, Rng& rng);

  const MlpSpec& spec() const { return spec_; }

  /// `modulation` is empty or has one entry per hidden layer.
  ad::NodePtr forward(const ad::NodePtr& x, std::span<const Modulation> modulation = {}) const;

  ParameterList parameters(std::string_view prefix) const;
  std::size_t parameter_count() const;

  /// Independent parameter storage with identical values.
  Mlp clone() const;

 private:
  struct Layer {
    ad::NodePtr weight;  // fan_in x fan_out
    ad::NodePtr bias;    // 1 x fan_out
  };

  Mlp() = default;

  MlpSpec spec_;
  std::vector<Layer> layers_;
};

enum class GeneratorMode { Independent, Conditional };

std::string_view to_string(GeneratorMode mode);
GeneratorMode parse_generator_mode(std::string_view text);

/// The K region generators: K disjoint networks, or one network whose
/// hidden features are modulated per region.
class GeneratorBank {
 public:
  static constexpr double kModulationNoise = 0.02;

  GeneratorBank(GeneratorMode mode, std::size_t regions, MlpSpec spec, Rng& rng,
                double modulation_noise = kModulationNoise);

  GeneratorMode mode() const { return mode_; }
  std::size_t num_regions() const { return regions_; }
  std::size_t latent_dim() const { return spec_.input_width(); }
  std::size_t data_dim() const { return spec_.output_width(); }
  const MlpSpec& spec() const { return spec_; }

  /// Samples of region `region` for latent codes z (batch x latent_dim).
  ad::NodePtr generate(std::size_t region, const ad::NodePtr& z) const;
  Tensor generate(std::size_t region, const Tensor& z) const;

  ParameterList parameters() const;
  std::size_t parameter_count() const { return count_scalars(parameters()); }

  /// Direct access for tests and tools.
  std::vector<Modulation>& modulation(std::size_t region) { return modulation_.at(region); }

  GeneratorBank clone() const;

 private:
  GeneratorBank() = default;

  GeneratorMode mode_ = GeneratorMode::Independent;
  std::size_t regions_ = 0;
  MlpSpec spec_;
  std::vector<Mlp> networks_;                       // K (independent) or 1 (conditional)
  std::vector<std::vector<Modulation>> modulation_;  // conditional only: [region][hidden layer]
};

inline constexpr double kLogitClamp = 50.0;

/// Batch x 1 logits, clamped to [-50, 50].
ad::NodePtr discriminate(const Mlp& discriminator, const ad::NodePtr& x);
/// Batch x K region logits.
ad::NodePtr classify(const Mlp& classifier, const ad::NodePtr& x);

/// Layer sizes of the low-dimensional experiments.
struct NetworkShape {
  std::size_t latent_dim = 128;
  std::size_t hidden_width = 256;
  std::size_t hidden_layers = 3;
  std::size_t data_dim = 2;

  MlpSpec generator() const;
  MlpSpec discriminator() const;
  MlpSpec classifier(std::size_t regions) const;

  friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

/// n standard-normal latent codes.
Tensor sample_latent(std::size_t batch, std::size_t latent_dim, Rng& rng);

}  // namespace venngan
