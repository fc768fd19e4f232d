#include "venngan/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <vector>

namespace venngan {

using nlohmann::json;

namespace {

constexpr std::array<char, 8> kMagic = {'V', 'N', 'N', 'G', 'A', 'N', 'C', 'K'};

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T get_le(std::istream& in, const char* what) {
  std::array<unsigned char, sizeof(T)> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) {
    throw CheckpointError(std::string("checkpoint truncated while reading ") + what);
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

// Every array a state owns, by name, in a fixed order.
std::vector<std::pair<std::string, Tensor*>> state_arrays(TrainState& state) {
  std::vector<std::pair<std::string, Tensor*>> out;
  auto group = [&out](const std::string& prefix, const ParameterList& params, AdamState& adam) {
    for (std::size_t k = 0; k < params.size(); ++k) {
      out.emplace_back(params[k].name, &params[k].node->mutable_value());
    }
    for (std::size_t k = 0; k < params.size(); ++k) out.emplace_back("adam." + prefix + ".m/" + params[k].name, &adam.first.at(k));
    for (std::size_t k = 0; k < params.size(); ++k) out.emplace_back("adam." + prefix + ".v/" + params[k].name, &adam.second.at(k));
  };
  const auto g = state.generators.parameters();
  group("generator", g, state.generator_adam);
  group("discriminator", state.discriminator_parameters(), state.discriminator_adam);
  group("classifier", state.classifier.parameters("classifier"), state.classifier_adam);
  for (std::size_t k = 0; k < g.size(); ++k) out.emplace_back("ema/" + g[k].name, &state.ema_shadow.at(k));
  return out;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ExperimentConfig& config, const TrainState& state) {
  // state_arrays needs mutable access to collect pointers; nothing is written through them here.
  auto arrays = state_arrays(const_cast<TrainState&>(state));

  json manifest;
  manifest["format_version"] = kCheckpointVersion;
  manifest["config"] = json::parse(config.serialize());
  manifest["iteration"] = state.iteration;
  manifest["rng"] = state.rng.serialize();
  manifest["adam_steps"] = {{"generator", state.generator_adam.step},
                            {"discriminator", state.discriminator_adam.step},
                            {"classifier", state.classifier_adam.step}};
  json entries = json::array();
  std::size_t offset = 0;
  for (const auto& [name, tensor] : arrays) {
    entries.push_back({{"name", name}, {"rows", tensor->rows()}, {"cols", tensor->cols()}, {"offset", offset}});
    offset += tensor->size();
  }
  manifest["arrays"] = std::move(entries);
  const std::string text = manifest.dump();

  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  try {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  } catch (const std::filesystem::filesystem_error& e) {
    throw CheckpointError("cannot write checkpoint " + path.string() + ": " + e.what());
  }
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
    out.write(kMagic.data(), kMagic.size());
    put_le<std::uint32_t>(out, kCheckpointVersion);
    put_le<std::uint64_t>(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& entry : arrays) {
      for (double v : entry.second->values()) put_le<double>(out, v);
    }
    if (!out) throw CheckpointError("failed writing checkpoint " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw CheckpointError("cannot move checkpoint into place at " + path.string() + ": " + ec.message());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());

  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw CheckpointError(path.string() + " is not a checkpoint (bad magic)");
  }
  const auto version = get_le<std::uint32_t>(in, "version");
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  const auto manifest_size = get_le<std::uint64_t>(in, "manifest length");
  if (manifest_size > (1ull << 30)) throw CheckpointError("implausible manifest length");
  std::string text(manifest_size, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(manifest_size))) {
    throw CheckpointError("checkpoint truncated inside the manifest");
  }

  json manifest;
  try {
    manifest = json::parse(text);
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint manifest: ") + e.what());
  }

  try {
    ExperimentConfig config = ExperimentConfig::parse(manifest.at("config").dump());
    TrainState state = TrainState::initialize(config.training);
    state.iteration = manifest.at("iteration").get<std::size_t>();
    state.rng = Rng::deserialize(manifest.at("rng").get<std::string>());
    state.generator_adam.step = manifest.at("adam_steps").at("generator").get<std::size_t>();
    state.discriminator_adam.step = manifest.at("adam_steps").at("discriminator").get<std::size_t>();
    state.classifier_adam.step = manifest.at("adam_steps").at("classifier").get<std::size_t>();

    auto expected = state_arrays(state);
    const auto& entries = manifest.at("arrays");
    if (entries.size() != expected.size()) {
      throw CheckpointError("checkpoint holds " + std::to_string(entries.size()) + " arrays, config implies " +
                            std::to_string(expected.size()));
    }
    std::size_t offset = 0;
    for (std::size_t k = 0; k < expected.size(); ++k) {
      const auto& e = entries[k];
      auto& [name, tensor] = expected[k];
      const auto rows = e.at("rows").get<std::size_t>();
      const auto cols = e.at("cols").get<std::size_t>();
      if (e.at("name").get<std::string>() != name || rows != tensor->rows() || cols != tensor->cols() ||
          e.at("offset").get<std::size_t>() != offset) {
        throw CheckpointError("checkpoint array " + std::to_string(k) + " ('" + e.at("name").get<std::string>() +
                              "' " + std::to_string(rows) + "x" + std::to_string(cols) + ") does not match '" +
                              name + "' " + to_string(tensor->shape()));
      }
      std::vector<double> values(rows * cols);
      for (auto& v : values) v = get_le<double>(in, "array payload");
      *tensor = Tensor(rows, cols, std::move(values));
      offset += rows * cols;
    }
    if (in.peek() != std::char_traits<char>::eof()) throw CheckpointError("trailing bytes after checkpoint payload");
    return {std::move(config), std::move(state)};
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint manifest: ") + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint config is invalid: ") + e.what());
  } catch (const NumericError& e) {
    throw CheckpointError(std::string("checkpoint holds non-finite values: ") + e.what());
  }
}

}  // namespace venngan
