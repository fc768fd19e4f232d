#include "venngan/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace venngan {

namespace {

// Stream ids under the config seed.
constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kTrainStream = 1;
constexpr std::uint64_t kEvalStream = 2;

Tensor leading_rows(const Tensor& t, std::size_t rows) {
  if (rows == t.rows()) return t;
  auto src = t.values().subspan(0, rows * t.cols());
  return Tensor(rows, t.cols(), std::vector<double>(src.begin(), src.end()));
}

ad::NodePtr leading_rows(const ad::NodePtr& n, std::size_t rows) {
  return rows == n->shape().rows ? n : ad::slice_rows(n, 0, rows);
}

ad::NodePtr negated_mean_log_sigmoid(const ad::NodePtr& logits) {
  return ad::scale(ad::reduce_mean(ad::log_sigmoid(logits)), -1.0);
}

// mean log(1 - sigmoid(x)) = mean log sigmoid(-x)
ad::NodePtr mean_log_one_minus_sigmoid(const ad::NodePtr& logits) {
  return ad::reduce_mean(ad::log_sigmoid(ad::scale(logits, -1.0)));
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string_view to_string(GeneratorLossKind kind) {
  return kind == GeneratorLossKind::NonSaturating ? "non_saturating" : "saturating";
}

GeneratorLossKind parse_generator_loss(std::string_view text) {
  if (text == "non_saturating") return GeneratorLossKind::NonSaturating;
  if (text == "saturating") return GeneratorLossKind::Saturating;
  throw std::invalid_argument("unknown generator loss '" + std::string(text) +
                              "' (expected non_saturating or saturating)");
}

std::vector<std::string> TrainConfig::violations() const {
  std::vector<std::string> out;
  if (per_region_batch == 0) out.emplace_back("per_region_batch must be at least 1");
  if (!(adam.learning_rate > 0.0)) out.emplace_back("learning_rate must be positive");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0)) out.emplace_back("beta1 must lie in [0, 1)");
  if (!(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) out.emplace_back("beta2 must lie in [0, 1)");
  if (!(adam.epsilon > 0.0)) out.emplace_back("adam epsilon must be positive");
  if (!(classifier_weight >= 0.0) || !std::isfinite(classifier_weight)) {
    out.emplace_back("classifier_weight must be finite and >= 0");
  }
  if (!(r1_weight >= 0.0) || !std::isfinite(r1_weight)) out.emplace_back("r1_weight must be finite and >= 0");
  if (!(ema_decay >= 0.0 && ema_decay < 1.0)) out.emplace_back("ema_decay must lie in [0, 1)");
  if (network.latent_dim == 0 || network.hidden_width == 0 || network.data_dim == 0) {
    out.emplace_back("network widths must be positive");
  }
  if (network.data_dim != 2) out.emplace_back("data_dim must be 2 (the mixtures are 2-D)");
  return out;
}

void TrainConfig::validate() const {
  auto problems = violations();
  if (problems.empty()) return;
  std::ostringstream msg;
  msg << "invalid training configuration:";
  for (const auto& p : problems) msg << "\n  - " << p;
  throw std::invalid_argument(msg.str());
}

void adam_step(Tensor& param, const Tensor& grad, Tensor& first_moment, Tensor& second_moment, std::size_t t,
               const AdamSettings& settings) {
  if (param.shape() != grad.shape() || param.shape() != first_moment.shape() ||
      param.shape() != second_moment.shape()) {
    throw ShapeError("adam_step: parameter " + to_string(param.shape()) + ", gradient " + to_string(grad.shape()) +
                     ", moments " + to_string(first_moment.shape()) + "/" + to_string(second_moment.shape()));
  }
  if (t == 0) throw std::invalid_argument("adam_step: step count is 1-based");
  const double b1 = settings.beta1;
  const double b2 = settings.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
  auto p = param.values();
  auto g = grad.values();
  auto m = first_moment.values();
  auto v = second_moment.values();
  for (std::size_t k = 0; k < p.size(); ++k) {
    m[k] = b1 * m[k] + (1.0 - b1) * g[k];
    v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
    const double m_hat = m[k] / c1;
    const double v_hat = v[k] / c2;
    p[k] -= settings.learning_rate * m_hat / (std::sqrt(v_hat) + settings.epsilon);
  }
}

AdamState AdamState::zeros_like(const ParameterList& params) {
  AdamState state;
  for (const auto& p : params) {
    state.first.push_back(Tensor::zeros(p.node->shape().rows, p.node->shape().cols));
    state.second.push_back(Tensor::zeros(p.node->shape().rows, p.node->shape().cols));
  }
  return state;
}

void AdamState::apply(const ParameterList& params, const AdamSettings& settings) {
  if (params.size() != first.size() || params.size() != second.size()) {
    throw ShapeError("AdamState: moment count does not match the parameter list");
  }
  ++step;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& node = params[k].node;
    const Tensor grad = node->grad() ? *node->grad() : Tensor::zeros(node->shape().rows, node->shape().cols);
    adam_step(node->mutable_value(), grad, first[k], second[k], step, settings);
  }
}

void ema_update(Tensor& shadow, const Tensor& value, double decay) {
  if (shadow.shape() != value.shape()) {
    throw ShapeError("ema_update: shadow " + to_string(shadow.shape()) + " vs " + to_string(value.shape()));
  }
  auto s = shadow.values();
  auto v = value.values();
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = decay * s[k] + (1.0 - decay) * v[k];
}

void ema_update(std::vector<Tensor>& shadow, const ParameterList& params, double decay) {
  if (shadow.size() != params.size()) throw ShapeError("ema_update: shadow does not cover the parameters");
  for (std::size_t k = 0; k < params.size(); ++k) ema_update(shadow[k], params[k].node->value(), decay);
}

TrainState TrainState::initialize(const TrainConfig& config) {
  config.validate();
  Rng init = Rng::derived(config.seed, {kInitStream});
  GeneratorBank generators(config.generator_mode, config.layout.num_regions(), config.network.generator(), init);
  std::vector<Mlp> discriminators;
  for (std::size_t i = 0; i < config.layout.num_sets(); ++i) {
    discriminators.emplace_back(config.network.discriminator(), init);
  }
  Mlp classifier(config.network.classifier(config.layout.num_regions()), init);

  TrainState state{std::move(generators), std::move(discriminators), std::move(classifier), {}, {}, {}, {}, 0,
                   Rng::derived(config.seed, {kTrainStream})};
  state.generator_adam = AdamState::zeros_like(state.generators.parameters());
  state.discriminator_adam = AdamState::zeros_like(state.discriminator_parameters());
  state.classifier_adam = AdamState::zeros_like(state.classifier.parameters("classifier"));
  state.ema_shadow = snapshot_values(state.generators.parameters());
  return state;
}

ParameterList TrainState::discriminator_parameters() const {
  ParameterList out;
  for (std::size_t i = 0; i < discriminators.size(); ++i) {
    auto p = discriminators[i].parameters("discriminator." + std::to_string(i));
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

GeneratorBank TrainState::ema_generators() const {
  GeneratorBank bank = generators.clone();
  auto params = bank.parameters();
  for (std::size_t k = 0; k < params.size(); ++k) params[k].node->mutable_value() = ema_shadow.at(k);
  return bank;
}

TrainingDiverged::TrainingDiverged(std::size_t iteration, std::string term, std::string detail)
    : std::runtime_error("training diverged at iteration " + std::to_string(iteration) + " in " + term + ": " + detail),
      iteration_(iteration),
      term_(std::move(term)) {}

DiscriminatorLoss discriminator_loss(const VennLayout& layout, std::size_t set, const Mlp& discriminator,
                                     const Tensor& real, const std::map<std::size_t, ad::NodePtr>& fakes,
                                     std::size_t per_region_batch, double r1_weight) {
  const auto regions = layout.set_regions(set);
  const auto counts = layout.per_region_batches(set, per_region_batch);
  if (fakes.size() != regions.size() ||
      !std::equal(regions.begin(), regions.end(), fakes.begin(), [](std::size_t j, const auto& kv) { return j == kv.first; })) {
    throw std::invalid_argument("discriminator_loss: fakes must cover exactly the regions of set " +
                                std::to_string(set));
  }
  std::vector<ad::NodePtr> parts;
  for (const auto& [j, node] : fakes) {
    if (node->shape().rows != counts.at(j)) {
      throw std::invalid_argument("discriminator_loss: region " + std::to_string(j) + " has " +
                                  std::to_string(node->shape().rows) + " samples, expected " +
                                  std::to_string(counts.at(j)));
    }
    parts.push_back(node);
  }
  const ad::NodePtr fake_union = ad::concat_rows(parts);

  const ad::NodePtr x_real = ad::constant(real);
  const ad::NodePtr real_logits = discriminate(discriminator, x_real);
  const ad::NodePtr fake_logits = discriminate(discriminator, fake_union);
  ad::NodePtr total = ad::add(negated_mean_log_sigmoid(real_logits),
                              ad::scale(mean_log_one_minus_sigmoid(fake_logits), -1.0));

  DiscriminatorLoss loss;
  loss.adversarial = total->value()(0, 0);
  if (r1_weight > 0.0) {
    const ad::NodePtr grad_x = ad::input_gradient_graph(real_logits, x_real);
    const ad::NodePtr penalty =
        ad::scale(ad::reduce_sum(ad::square(grad_x)), 1.0 / static_cast<double>(real.rows()));
    loss.r1 = penalty->value()(0, 0);
    total = ad::add(total, ad::scale(penalty, r1_weight));
  }
  loss.total = total;
  return loss;
}

GeneratorLoss generator_loss(const VennLayout& layout, std::span<const ad::NodePtr> fakes,
                             std::span<const Mlp> discriminators, const Mlp* classifier, double lambda,
                             std::size_t per_region_batch, GeneratorLossKind kind) {
  if (fakes.size() != layout.num_regions()) {
    throw std::invalid_argument("generator_loss: expected samples for " + std::to_string(layout.num_regions()) +
                                " regions, got " + std::to_string(fakes.size()));
  }
  if (discriminators.size() != layout.num_sets()) {
    throw std::invalid_argument("generator_loss: expected " + std::to_string(layout.num_sets()) +
                                " discriminators, got " + std::to_string(discriminators.size()));
  }
  ad::NodePtr adversarial;
  for (std::size_t i = 0; i < layout.num_sets(); ++i) {
    std::vector<ad::NodePtr> parts;
    for (const auto& [j, count] : layout.per_region_batches(i, per_region_batch)) {
      parts.push_back(leading_rows(fakes[j], count));
    }
    const ad::NodePtr logits = discriminate(discriminators[i], ad::concat_rows(parts));
    ad::NodePtr term = kind == GeneratorLossKind::NonSaturating ? negated_mean_log_sigmoid(logits)
                                                                 : mean_log_one_minus_sigmoid(logits);
    adversarial = adversarial ? ad::add(adversarial, term) : term;
  }
  adversarial = ad::scale(adversarial, 1.0 / static_cast<double>(layout.num_sets()));

  GeneratorLoss loss;
  loss.adversarial = adversarial->value()(0, 0);
  loss.total = adversarial;
  if (lambda > 0.0) {
    if (classifier == nullptr) throw std::invalid_argument("generator_loss: lambda > 0 needs a classifier");
    std::vector<std::size_t> targets;
    for (std::size_t j = 0; j < fakes.size(); ++j) targets.insert(targets.end(), fakes[j]->shape().rows, j);
    std::vector<ad::NodePtr> all(fakes.begin(), fakes.end());
    const ad::NodePtr ce = ad::softmax_cross_entropy(classify(*classifier, ad::concat_rows(all)), targets);
    loss.classifier = ce->value()(0, 0);
    loss.total = ad::add(adversarial, ad::scale(ce, lambda));
  }
  return loss;
}

MetricsCsv::MetricsCsv(std::ostream& out, const VennLayout& layout)
    : out_(out), sets_(layout.num_sets()), labels_(layout.labels()) {}

void MetricsCsv::header() {
  out_ << "iteration";
  for (std::size_t i = 0; i < sets_; ++i) out_ << ",d_loss_" << (i + 1);
  out_ << ",d_loss_mean,g_adv_loss,cls_loss";
  for (auto l : labels_) out_ << ",acc_r" << l;
  out_ << ",acc_avg\n";
}

void MetricsCsv::row(const StepMetrics& m) {
  out_ << m.iteration;
  for (double d : m.discriminator_losses) out_ << ',' << format_number(d);
  out_ << ',' << format_number(m.discriminator_mean) << ',' << format_number(m.generator_adversarial) << ',';
  if (m.classifier) out_ << format_number(*m.classifier);
  for (std::size_t j = 0; j < labels_.size(); ++j) {
    out_ << ',';
    if (m.evaluation) out_ << format_number(m.evaluation->accuracy[j]);
  }
  out_ << ',';
  if (m.evaluation) out_ << format_number(m.evaluation->average);
  out_ << '\n';
}

Trainer::Trainer(TrainConfig config, GaussianMixtureSpec data, EvalSchedule schedule)
    : Trainer(config, std::move(data), TrainState::initialize(config), schedule) {}

Trainer::Trainer(TrainConfig config, GaussianMixtureSpec data, TrainState state, EvalSchedule schedule)
    : config_(std::move(config)), data_(std::move(data)), schedule_(schedule), state_(std::move(state)) {
  config_.validate();
  data_.validate();
  if (data_.layout.membership() != config_.layout.membership()) {
    throw std::invalid_argument("data sets and training layout disagree on membership");
  }
  rows_per_region_.assign(config_.layout.num_regions(), 0);
  for (std::size_t i = 0; i < config_.layout.num_sets(); ++i) {
    for (const auto& [j, count] : config_.layout.per_region_batches(i, config_.per_region_batch)) {
      rows_per_region_[j] = std::max(rows_per_region_[j], count);
    }
  }
}

std::vector<Tensor> Trainer::detached_fakes(const std::vector<std::size_t>& rows_per_region) {
  std::vector<Tensor> out;
  const auto& bank = state_.generators;
  if (bank.mode() == GeneratorMode::Conditional) {
    const auto widest = *std::max_element(rows_per_region.begin(), rows_per_region.end());
    const Tensor z = sample_latent(widest, bank.latent_dim(), state_.rng);
    for (std::size_t j = 0; j < rows_per_region.size(); ++j) {
      out.push_back(bank.generate(j, leading_rows(z, rows_per_region[j])));
    }
    return out;
  }
  for (std::size_t j = 0; j < rows_per_region.size(); ++j) {
    out.push_back(bank.generate(j, sample_latent(rows_per_region[j], bank.latent_dim(), state_.rng)));
  }
  return out;
}

std::vector<ad::NodePtr> Trainer::live_fakes(const std::vector<std::size_t>& rows_per_region) {
  std::vector<ad::NodePtr> out;
  const auto& bank = state_.generators;
  if (bank.mode() == GeneratorMode::Conditional) {
    const auto widest = *std::max_element(rows_per_region.begin(), rows_per_region.end());
    const Tensor z = sample_latent(widest, bank.latent_dim(), state_.rng);
    for (std::size_t j = 0; j < rows_per_region.size(); ++j) {
      out.push_back(bank.generate(j, ad::constant(leading_rows(z, rows_per_region[j]))));
    }
    return out;
  }
  for (std::size_t j = 0; j < rows_per_region.size(); ++j) {
    out.push_back(bank.generate(j, ad::constant(sample_latent(rows_per_region[j], bank.latent_dim(), state_.rng))));
  }
  return out;
}

StepMetrics Trainer::step() {
  const VennLayout& layout = config_.layout;
  const std::size_t n = layout.num_sets();
  const std::size_t next = state_.iteration + 1;
  StepMetrics metrics;
  metrics.iteration = next;

  auto guarded = [next](const std::string& term, auto&& fn) {
    try {
      return fn();
    } catch (const NumericError& e) {
      throw TrainingDiverged(next, term, e.what());
    }
  };

  // Discriminators.
  const ParameterList d_params = state_.discriminator_parameters();
  zero_grads(d_params);
  std::vector<Tensor> reals;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t total = config_.per_region_batch * layout.set_regions(i).size();
    reals.push_back(sample_real(data_, i, total, state_.rng).points);
  }
  const std::vector<Tensor> fixed = guarded("generator forward", [&] { return detached_fakes(rows_per_region_); });
  for (std::size_t i = 0; i < n; ++i) {
    const std::string term = "discriminator " + std::to_string(i + 1) + " loss";
    guarded(term, [&] {
      std::map<std::size_t, ad::NodePtr> fakes;
      for (const auto& [j, count] : layout.per_region_batches(i, config_.per_region_batch)) {
        fakes.emplace(j, ad::constant(leading_rows(fixed[j], count)));
      }
      const DiscriminatorLoss loss = discriminator_loss(layout, i, state_.discriminators[i], reals[i], fakes,
                                                        config_.per_region_batch, config_.r1_weight);
      ad::backward(loss.total);
      metrics.discriminator_losses.push_back(loss.total->value()(0, 0));
      return 0;
    });
  }
  state_.discriminator_adam.apply(d_params, config_.adam);
  double d_sum = 0.0;
  for (double d : metrics.discriminator_losses) d_sum += d;
  metrics.discriminator_mean = d_sum / static_cast<double>(n);

  // Generators and classifier.
  const ParameterList g_params = state_.generators.parameters();
  const ParameterList c_params = state_.classifier.parameters("classifier");
  zero_grads(g_params);
  zero_grads(c_params);
  const bool use_classifier = config_.classifier_weight > 0.0;
  guarded("generator loss", [&] {
    const std::vector<ad::NodePtr> fakes = live_fakes(rows_per_region_);
    const GeneratorLoss loss =
        generator_loss(layout, fakes, state_.discriminators, use_classifier ? &state_.classifier : nullptr,
                       config_.classifier_weight, config_.per_region_batch, config_.generator_loss);
    ad::backward(loss.total);
    metrics.generator_adversarial = loss.adversarial;
    metrics.classifier = loss.classifier;
    return 0;
  });
  zero_grads(d_params);
  state_.generator_adam.apply(g_params, config_.adam);
  if (use_classifier) state_.classifier_adam.apply(c_params, config_.adam);

  ema_update(state_.ema_shadow, g_params, config_.ema_decay);
  state_.iteration = next;

  if (schedule_.every > 0 && (next % schedule_.every == 0 || next == config_.iterations)) {
    metrics.evaluation = evaluate(schedule_.samples_per_region, schedule_.use_ema);
  }
  return metrics;
}

void Trainer::run(const std::function<void(const Trainer&, const StepMetrics&)>& on_step) {
  while (state_.iteration < config_.iterations) {
    const StepMetrics m = step();
    if (on_step) on_step(*this, m);
  }
}

RegionReport Trainer::evaluate(std::size_t samples_per_region, bool use_ema) const {
  Rng rng = Rng::derived(config_.seed, {kEvalStream, state_.iteration});
  if (use_ema) return region_accuracy(state_.ema_generators(), data_, samples_per_region, rng);
  return region_accuracy(state_.generators, data_, samples_per_region, rng);
}

TrainResult train(const TrainConfig& config, const GaussianMixtureSpec& data, const EvalSchedule& schedule) {
  Trainer trainer(config, data, schedule);
  std::vector<StepMetrics> log;
  trainer.run([&log](const Trainer&, const StepMetrics& m) { log.push_back(m); });
  return {std::move(trainer.state()), std::move(log)};
}

}  // namespace venngan
