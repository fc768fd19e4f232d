#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "venngan/autodiff.hpp"
#include "venngan/data.hpp"
#include "venngan/evaluation.hpp"
#include "venngan/networks.hpp"
#include "venngan/rng.hpp"
#include "venngan/venn_layout.hpp"

namespace venngan {

enum class GeneratorLossKind { NonSaturating, Saturating };

std::string_view to_string(GeneratorLossKind kind);
GeneratorLossKind parse_generator_loss(std::string_view text);

struct AdamSettings {
  double learning_rate = 2e-4;
  double beta1 = 0.0;
  double beta2 = 0.9;
  double epsilon = 1e-8;

  friend bool operator==(const AdamSettings&, const AdamSettings&) = default;
};

struct TrainConfig {
  VennLayout layout = VennLayout::build(DiagramKind::D2);
  GeneratorMode generator_mode = GeneratorMode::Independent;
  NetworkShape network;
  std::size_t per_region_batch = 16;
  std::size_t iterations = 5000;
  AdamSettings adam;
  double classifier_weight = 0.1;  // lambda; 0 disables the classifier
  double r1_weight = 1.0;          // 0 disables the penalty
  double ema_decay = 0.999;
  GeneratorLossKind generator_loss = GeneratorLossKind::NonSaturating;
  std::uint64_t seed = 0;

  /// Every violated invariant, empty if valid.
  std::vector<std::string> violations() const;
  void validate() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// One ADAM update with bias correction; t is the 1-based step count.
void adam_step(Tensor& param, const Tensor& grad, Tensor& first_moment, Tensor& second_moment, std::size_t t,
               const AdamSettings& settings);

/// First and second moments for every parameter of one optimizer.
struct AdamState {
  std::vector<Tensor> first;
  std::vector<Tensor> second;
  std::size_t step = 0;

  static AdamState zeros_like(const ParameterList& params);
  /// Applies one step using each parameter's accumulated grad (absent grad = 0).
  void apply(const ParameterList& params, const AdamSettings& settings);
};

/// shadow <- decay * shadow + (1 - decay) * value.
void ema_update(Tensor& shadow, const Tensor& value, double decay);
void ema_update(std::vector<Tensor>& shadow, const ParameterList& params, double decay);

/// Everything that evolves during training.
struct TrainState {
  GeneratorBank generators;
  std::vector<Mlp> discriminators;
  Mlp classifier;
  AdamState generator_adam;
  AdamState discriminator_adam;
  AdamState classifier_adam;
  std::vector<Tensor> ema_shadow;  // aligned with generators.parameters()
  std::size_t iteration = 0;
  Rng rng;

  /// Fresh networks drawn from a stream derived from config.seed.
  static TrainState initialize(const TrainConfig& config);

  ParameterList discriminator_parameters() const;
  /// Generator bank whose parameters hold the EMA shadow.
  GeneratorBank ema_generators() const;
};

/// Raised when a loss term turns non-finite.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(std::size_t iteration, std::string term, std::string detail);
  std::size_t iteration() const { return iteration_; }
  const std::string& term() const { return term_; }

 private:
  std::size_t iteration_;
  std::string term_;
};

struct DiscriminatorLoss {
  ad::NodePtr total;
  double adversarial = 0.0;
  double r1 = 0.0;
};

/// Loss minimized by discriminator `set`:
///   -mean log sigmoid(D(real)) - mean log(1 - sigmoid(D(fake union))) + r1_weight * mean |dD/dx (real)|^2
/// `fakes` must hold exactly the regions of the set with per_region_batches counts;
/// the union is their row concatenation in region order.
DiscriminatorLoss discriminator_loss(const VennLayout& layout, std::size_t set, const Mlp& discriminator,
                                     const Tensor& real, const std::map<std::size_t, ad::NodePtr>& fakes,
                                     std::size_t per_region_batch, double r1_weight);

struct GeneratorLoss {
  ad::NodePtr total;
  double adversarial = 0.0;
  std::optional<double> classifier;  // cross-entropy, before the lambda factor
};

/// Generator-side objective: mean over sets of the adversarial term against
/// each discriminator's fake union, plus lambda times the region classifier's
/// cross-entropy on all regions' samples. `fakes[j]` holds at least the
/// largest per-set count for region j; each union takes its leading rows.
GeneratorLoss generator_loss(const VennLayout& layout, std::span<const ad::NodePtr> fakes,
                             std::span<const Mlp> discriminators, const Mlp* classifier, double lambda,
                             std::size_t per_region_batch, GeneratorLossKind kind);

struct StepMetrics {
  std::size_t iteration = 0;  // 1-based iteration just completed
  std::vector<double> discriminator_losses;
  double discriminator_mean = 0.0;  // (1/n) sum, the reported game value
  double generator_adversarial = 0.0;
  std::optional<double> classifier;
  std::optional<RegionReport> evaluation;

  friend bool operator==(const StepMetrics&, const StepMetrics&) = default;
};

/// Streams metrics rows as CSV.
class MetricsCsv {
 public:
  MetricsCsv(std::ostream& out, const VennLayout& layout);
  void header();
  void row(const StepMetrics& m);

 private:
  std::ostream& out_;
  std::size_t sets_;
  std::vector<std::size_t> labels_;
};

struct EvalSchedule {
  std::size_t every = 500;  // 0 disables periodic evaluation
  std::size_t samples_per_region = kDefaultSamplesPerRegion;
  bool use_ema = true;

  friend bool operator==(const EvalSchedule&, const EvalSchedule&) = default;
};

/// Runs the alternating updates. Each step:
///   1. real batches for every set, then fresh detached fakes, one update of all discriminators;
///   2. fresh fakes, one update of the generators and (lambda > 0) the classifier;
///   3. EMA update of the generator shadow.
/// In conditional mode every region in a step shares the same latent codes.
class Trainer {
 public:
  Trainer(TrainConfig config, GaussianMixtureSpec data, EvalSchedule schedule = {});
  /// Continues from a restored state.
  Trainer(TrainConfig config, GaussianMixtureSpec data, TrainState state, EvalSchedule schedule = {});

  StepMetrics step();
  /// Steps until config().iterations; calls `on_step` after each one.
  void run(const std::function<void(const Trainer&, const StepMetrics&)>& on_step = {});

  /// Report for the current generators (EMA shadow if the schedule says so),
  /// with a sampling stream keyed by (seed, iteration).
  RegionReport evaluate(std::size_t samples_per_region, bool use_ema) const;

  const TrainConfig& config() const { return config_; }
  const GaussianMixtureSpec& data() const { return data_; }
  const EvalSchedule& schedule() const { return schedule_; }
  const TrainState& state() const { return state_; }
  TrainState& state() { return state_; }

 private:
  std::vector<Tensor> detached_fakes(const std::vector<std::size_t>& rows_per_region);
  std::vector<ad::NodePtr> live_fakes(const std::vector<std::size_t>& rows_per_region);

  TrainConfig config_;
  GaussianMixtureSpec data_;
  EvalSchedule schedule_;
  TrainState state_;
  std::vector<std::size_t> rows_per_region_;
};

struct TrainResult {
  TrainState state;
  std::vector<StepMetrics> metrics;
};

/// Convenience wrapper: initialize, run, return the final state and log.
TrainResult train(const TrainConfig& config, const GaussianMixtureSpec& data, const EvalSchedule& schedule = {});

}  // namespace venngan
