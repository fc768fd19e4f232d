#include "venngan/networks.hpp"

#include <cmath>
#include <stdexcept>

namespace venngan {

void MlpSpec::validate() const {
  if (widths.size() < 2) {
    throw std::invalid_argument("MLP needs at least an input and an output width");
  }
  for (auto w : widths) {
    if (w == 0) throw std::invalid_argument("MLP widths must be positive");
  }
}

std::size_t count_scalars(const ParameterList& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.node->value().size();
  return n;
}

std::vector<Tensor> snapshot_values(const ParameterList& params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(p.node->value());
  return out;
}

void zero_grads(const ParameterList& params) {
  for (const auto& p : params) p.node->zero_grad();
}

Mlp::Mlp(MlpSpec spec, Rng& rng) : spec_(std::move(spec)) {
  spec_.validate();
  for (std::size_t l = 0; l + 1 < spec_.widths.size(); ++l) {
    const std::size_t fan_in = spec_.widths[l];
    const std::size_t fan_out = spec_.widths[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Layer layer;
    layer.weight = ad::parameter(rng.uniform_tensor(fan_in, fan_out, -bound, bound));
    layer.bias = ad::parameter(rng.uniform_tensor(1, fan_out, -bound, bound));
    layers_.push_back(std::move(layer));
  }
}

ad::NodePtr Mlp::forward(const ad::NodePtr& x, std::span<const Modulation> modulation) const {
  if (x->shape().cols != spec_.input_width()) {
    throw ShapeError("MLP expects " + std::to_string(spec_.input_width()) + " input features, got " +
                     std::to_string(x->shape().cols));
  }
  if (!modulation.empty() && modulation.size() != spec_.hidden_layer_count()) {
    throw std::invalid_argument("modulation must cover every hidden layer");
  }
  ad::NodePtr h = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    h = ad::add_row(ad::matmul(h, layers_[l].weight), layers_[l].bias);
    const bool last = l + 1 == layers_.size();
    if (last) {
      if (spec_.output == OutputActivation::Tanh) h = ad::tanh(h);
      break;
    }
    if (!modulation.empty()) {
      h = ad::add_row(ad::mul_row(h, modulation[l].scale), modulation[l].shift);
    }
    h = ad::leaky_relu(h);
  }
  return h;
}

ParameterList Mlp::parameters(std::string_view prefix) const {
  ParameterList out;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const std::string base = std::string(prefix) + ".layer" + std::to_string(l);
    out.push_back({base + ".weight", layers_[l].weight});
    out.push_back({base + ".bias", layers_[l].bias});
  }
  return out;
}

std::size_t Mlp::parameter_count() const { return count_scalars(parameters("")); }

Mlp Mlp::clone() const {
  Mlp copy;
  copy.spec_ = spec_;
  for (const auto& layer : layers_) {
    copy.layers_.push_back({ad::parameter(layer.weight->value()), ad::parameter(layer.bias->value())});
  }
  return copy;
}

std::string_view to_string(GeneratorMode mode) {
  return mode == GeneratorMode::Independent ? "independent" : "conditional";
}

GeneratorMode parse_generator_mode(std::string_view text) {
  if (text == "independent") return GeneratorMode::Independent;
  if (text == "conditional") return GeneratorMode::Conditional;
  throw std::invalid_argument("unknown generator mode '" + std::string(text) +
                              "' (expected independent or conditional)");
}

GeneratorBank::GeneratorBank(GeneratorMode mode, std::size_t regions, MlpSpec spec, Rng& rng,
                             double modulation_noise)
    : mode_(mode), regions_(regions), spec_(std::move(spec)) {
  spec_.validate();
  if (regions == 0) throw std::invalid_argument("generator bank needs at least one region");
  if (mode_ == GeneratorMode::Independent) {
    for (std::size_t j = 0; j < regions; ++j) networks_.emplace_back(spec_, rng);
    return;
  }
  networks_.emplace_back(spec_, rng);
  for (std::size_t j = 0; j < regions; ++j) {
    std::vector<Modulation> mods;
    for (std::size_t l = 0; l < spec_.hidden_layer_count(); ++l) {
      const std::size_t width = spec_.widths[l + 1];
      mods.push_back({ad::parameter(rng.normal_tensor(1, width, 1.0, modulation_noise)),
                      ad::parameter(rng.normal_tensor(1, width, 0.0, modulation_noise))});
    }
    modulation_.push_back(std::move(mods));
  }
}

ad::NodePtr GeneratorBank::generate(std::size_t region, const ad::NodePtr& z) const {
  if (region >= regions_) {
    throw std::out_of_range("region " + std::to_string(region) + " out of range for " +
                            std::to_string(regions_) + " regions");
  }
  if (mode_ == GeneratorMode::Independent) return networks_[region].forward(z);
  return networks_.front().forward(z, modulation_[region]);
}

Tensor GeneratorBank::generate(std::size_t region, const Tensor& z) const {
  return generate(region, ad::constant(z))->value();
}

ParameterList GeneratorBank::parameters() const {
  ParameterList out;
  if (mode_ == GeneratorMode::Independent) {
    for (std::size_t j = 0; j < regions_; ++j) {
      auto p = networks_[j].parameters("generator." + std::to_string(j));
      out.insert(out.end(), p.begin(), p.end());
    }
    return out;
  }
  out = networks_.front().parameters("generator");
  for (std::size_t j = 0; j < regions_; ++j) {
    for (std::size_t l = 0; l < modulation_[j].size(); ++l) {
      const std::string base = "generator.region" + std::to_string(j) + ".layer" + std::to_string(l);
      out.push_back({base + ".scale", modulation_[j][l].scale});
      out.push_back({base + ".shift", modulation_[j][l].shift});
    }
  }
  return out;
}

GeneratorBank GeneratorBank::clone() const {
  GeneratorBank copy;
  copy.mode_ = mode_;
  copy.regions_ = regions_;
  copy.spec_ = spec_;
  for (const auto& net : networks_) copy.networks_.push_back(net.clone());
  for (const auto& mods : modulation_) {
    std::vector<Modulation> m;
    for (const auto& mod : mods) m.push_back({ad::parameter(mod.scale->value()), ad::parameter(mod.shift->value())});
    copy.modulation_.push_back(std::move(m));
  }
  return copy;
}

ad::NodePtr discriminate(const Mlp& discriminator, const ad::NodePtr& x) {
  if (discriminator.spec().output_width() != 1) {
    throw ShapeError("discriminator must have a single output");
  }
  return ad::clamp(discriminator.forward(x), -kLogitClamp, kLogitClamp);
}

ad::NodePtr classify(const Mlp& classifier, const ad::NodePtr& x) { return classifier.forward(x); }

MlpSpec NetworkShape::generator() const {
  MlpSpec spec;
  spec.widths.push_back(latent_dim);
  for (std::size_t l = 0; l < hidden_layers; ++l) spec.widths.push_back(hidden_width);
  spec.widths.push_back(data_dim);
  return spec;
}

MlpSpec NetworkShape::discriminator() const {
  MlpSpec spec;
  spec.widths.push_back(data_dim);
  for (std::size_t l = 0; l < hidden_layers; ++l) spec.widths.push_back(hidden_width);
  spec.widths.push_back(1);
  return spec;
}

MlpSpec NetworkShape::classifier(std::size_t regions) const {
  MlpSpec spec = discriminator();
  spec.widths.back() = regions;
  return spec;
}

Tensor sample_latent(std::size_t batch, std::size_t latent_dim, Rng& rng) {
  if (batch == 0) throw std::invalid_argument("latent batch must be at least 1");
  return rng.normal_tensor(batch, latent_dim);
}

}  // namespace venngan
