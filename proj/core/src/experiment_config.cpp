#include "venngan/experiment_config.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <sstream>

namespace venngan {

using nlohmann::json;

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
  std::ostringstream out;
  out << "invalid experiment config:";
  for (const auto& p : problems) out << "\n  - " << p;
  return out.str();
}

// Reads fields of one JSON object, recording type errors and unknown keys.
class Reader {
 public:
  Reader(const json& obj, std::string path, std::vector<std::string>& problems)
      : obj_(obj), path_(std::move(path)), problems_(problems) {
    if (!obj_.is_object()) problems_.push_back(where("") + " must be an object");
  }

  bool has(const std::string& key) const { return obj_.is_object() && obj_.contains(key); }

  template <typename T>
  std::optional<T> get(const std::string& key) {
    used_.insert(key);
    if (!has(key)) return std::nullopt;
    try {
      return obj_.at(key).get<T>();
    } catch (const json::exception&) {
      problems_.push_back(where(key) + " has the wrong type");
      return std::nullopt;
    }
  }

  template <typename T>
  void read(const std::string& key, T& target) {
    if (auto v = get<T>(key)) target = *v;
  }

  std::optional<Reader> child(const std::string& key) {
    used_.insert(key);
    if (!has(key)) return std::nullopt;
    return Reader(obj_.at(key), path_.empty() ? key : path_ + "." + key, problems_);
  }

  void finish() const {
    if (!obj_.is_object()) return;
    for (const auto& [key, _] : obj_.items()) {
      if (!used_.count(key)) problems_.push_back("unknown key " + where(key));
    }
  }

  std::string where(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "config" : "'" + path_ + "'";
    return "'" + (path_.empty() ? key : path_ + "." + key) + "'";
  }

 private:
  const json& obj_;
  std::string path_;
  std::vector<std::string>& problems_;
  std::set<std::string> used_;
};

std::optional<VennLayout> read_layout(Reader& r, std::vector<std::string>& problems) {
  const auto kind_text = r.get<std::string>("kind");
  if (!kind_text) {
    problems.push_back(r.where("kind") + " is required");
    return std::nullopt;
  }
  DiagramKind kind;
  try {
    kind = parse_diagram_kind(*kind_text);
  } catch (const std::invalid_argument& e) {
    problems.emplace_back(e.what());
    return std::nullopt;
  }
  if (kind != DiagramKind::Custom) {
    r.finish();
    return VennLayout::build(kind);
  }
  auto membership = r.get<Membership>("membership");
  auto mixture = r.get<Matrix>("mixture");
  auto labels = r.get<std::vector<std::size_t>>("labels");
  r.finish();
  if (!membership) {
    problems.push_back(r.where("membership") + " is required for a custom layout");
    return std::nullopt;
  }
  try {
    return VennLayout::custom(*membership, mixture, labels);
  } catch (const LayoutError& e) {
    for (const auto& v : e.violations()) problems.push_back("layout: " + v);
  }
  return std::nullopt;
}

json layout_to_json(const VennLayout& layout) {
  json j;
  j["kind"] = std::string(to_string(layout.kind()));
  if (layout.kind() == DiagramKind::Custom) {
    j["membership"] = layout.membership();
    j["mixture"] = layout.mixture();
    j["labels"] = layout.labels();
  }
  return j;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::invalid_argument(join_problems(problems)), problems_(std::move(problems)) {}

ExperimentConfig ExperimentConfig::parse(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("malformed JSON: ") + e.what()});
  }

  std::vector<std::string> problems;
  ExperimentConfig cfg;
  Reader top(root, "", problems);
  top.read("name", cfg.name);
  top.read("seed", cfg.training.seed);

  std::optional<VennLayout> layout;
  if (auto r = top.child("layout")) {
    layout = read_layout(*r, problems);
  } else {
    problems.emplace_back("'layout' is required");
  }

  if (auto mode = top.get<std::string>("generator_mode")) {
    try {
      cfg.training.generator_mode = parse_generator_mode(*mode);
    } catch (const std::invalid_argument& e) {
      problems.emplace_back(e.what());
    }
  }

  if (auto r = top.child("network")) {
    r->read("latent_dim", cfg.training.network.latent_dim);
    r->read("hidden_width", cfg.training.network.hidden_width);
    r->read("hidden_layers", cfg.training.network.hidden_layers);
    r->read("data_dim", cfg.training.network.data_dim);
    r->finish();
  }

  if (auto r = top.child("training")) {
    auto& t = cfg.training;
    r->read("per_region_batch", t.per_region_batch);
    r->read("iterations", t.iterations);
    r->read("learning_rate", t.adam.learning_rate);
    r->read("beta1", t.adam.beta1);
    r->read("beta2", t.adam.beta2);
    r->read("adam_epsilon", t.adam.epsilon);
    r->read("classifier_weight", t.classifier_weight);
    r->read("r1_weight", t.r1_weight);
    r->read("ema_decay", t.ema_decay);
    if (auto loss = r->get<std::string>("generator_loss")) {
      try {
        t.generator_loss = parse_generator_loss(*loss);
      } catch (const std::invalid_argument& e) {
        problems.emplace_back(e.what());
      }
    }
    r->finish();
  }

  std::optional<std::vector<std::array<double, 2>>> means;
  std::optional<double> variance;
  std::optional<std::vector<std::size_t>> region_to_component;
  if (auto r = top.child("data")) {
    means = r->get<std::vector<std::array<double, 2>>>("means");
    variance = r->get<double>("variance");
    region_to_component = r->get<std::vector<std::size_t>>("region_to_component");
    r->finish();
  }

  if (auto r = top.child("evaluation")) {
    r->read("every", cfg.evaluation.every);
    r->read("samples_per_region", cfg.evaluation.samples_per_region);
    r->read("use_ema", cfg.evaluation.use_ema);
    r->finish();
  }
  if (cfg.evaluation.samples_per_region == 0) problems.emplace_back("evaluation.samples_per_region must be >= 1");

  if (auto r = top.child("output")) {
    r->read("directory", cfg.output.directory);
    r->read("checkpoint_every", cfg.output.checkpoint_every);
    r->read("plot_every", cfg.output.plot_every);
    r->read("plot_points_per_group", cfg.output.plot_points_per_group);
    r->finish();
  }
  if (cfg.output.plot_points_per_group == 0) problems.emplace_back("output.plot_points_per_group must be >= 1");
  top.finish();

  for (auto& v : cfg.training.violations()) problems.push_back("training: " + v);

  if (layout) {
    cfg.training.layout = *layout;
    try {
      if (!means && !variance && !region_to_component) {
        cfg.data = default_spec_for(*layout);
      } else {
        GaussianMixtureSpec spec{*layout, {}, 0.0, {}};
        if (means) {
          spec.means.assign(means->begin(), means->end());
        } else {
          spec.means = default_spec_for(*layout).means;
        }
        if (region_to_component) {
          spec.region_to_component = *region_to_component;
        } else {
          for (std::size_t j = 0; j < layout->num_regions(); ++j) spec.region_to_component.push_back(j);
        }
        spec.variance = variance ? *variance : default_variance(spec.means);
        spec.validate();
        cfg.data = std::move(spec);
      }
      if (!oracle_separability(cfg.data)) {
        problems.emplace_back("data: components are not separable enough for the evaluation oracle");
      }
    } catch (const std::invalid_argument& e) {
      problems.push_back(std::string("data: ") + e.what());
    }
  }

  if (!problems.empty()) throw ConfigError(std::move(problems));
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({"cannot read config file " + path.string()});
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str());
}

std::string ExperimentConfig::serialize() const {
  json j;
  j["name"] = name;
  j["seed"] = training.seed;
  j["layout"] = layout_to_json(training.layout);
  j["generator_mode"] = std::string(to_string(training.generator_mode));
  j["network"] = {{"latent_dim", training.network.latent_dim},
                  {"hidden_width", training.network.hidden_width},
                  {"hidden_layers", training.network.hidden_layers},
                  {"data_dim", training.network.data_dim}};
  j["training"] = {{"per_region_batch", training.per_region_batch},
                   {"iterations", training.iterations},
                   {"learning_rate", training.adam.learning_rate},
                   {"beta1", training.adam.beta1},
                   {"beta2", training.adam.beta2},
                   {"adam_epsilon", training.adam.epsilon},
                   {"classifier_weight", training.classifier_weight},
                   {"r1_weight", training.r1_weight},
                   {"ema_decay", training.ema_decay},
                   {"generator_loss", std::string(to_string(training.generator_loss))}};
  j["data"] = {{"means", data.means}, {"variance", data.variance}, {"region_to_component", data.region_to_component}};
  j["evaluation"] = {{"every", evaluation.every},
                     {"samples_per_region", evaluation.samples_per_region},
                     {"use_ema", evaluation.use_ema}};
  j["output"] = {{"directory", output.directory},
                 {"checkpoint_every", output.checkpoint_every},
                 {"plot_every", output.plot_every},
                 {"plot_points_per_group", output.plot_points_per_group}};
  return j.dump(2) + "\n";
}

}  // namespace venngan
