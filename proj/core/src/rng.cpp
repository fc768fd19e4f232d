#include "venngan/rng.hpp"

#include <sstream>
#include <stdexcept>
#include <vector>

namespace venngan {

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

Rng Rng::derived(std::uint64_t seed, std::initializer_list<std::uint64_t> stream) {
  std::vector<std::uint32_t> words;
  auto push = [&words](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(seed);
  for (auto s : stream) push(s);
  std::seed_seq seq(words.begin(), words.end());
  Rng rng;
  rng.engine_.seed(seq);
  return rng;
}

std::size_t Rng::index(std::size_t n) {
  if (n == 0) {
    throw std::invalid_argument("Rng::index: empty range");
  }
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(engine_);
}

Tensor Rng::normal_tensor(std::size_t rows, std::size_t cols, double mean, double stddev) {
  std::vector<double> values(rows * cols);
  for (auto& v : values) v = mean + stddev * normal();
  return Tensor(rows, cols, std::move(values));
}

Tensor Rng::uniform_tensor(std::size_t rows, std::size_t cols, double lo, double hi) {
  std::vector<double> values(rows * cols);
  for (auto& v : values) v = lo + (hi - lo) * uniform();
  return Tensor(rows, cols, std::move(values));
}

std::string Rng::serialize() const {
  std::ostringstream out;
  out << engine_ << ' ' << normal_;
  return out.str();
}

Rng Rng::deserialize(const std::string& state) {
  Rng rng;
  std::istringstream in(state);
  in >> rng.engine_ >> rng.normal_;
  if (!in) {
    throw std::invalid_argument("Rng::deserialize: malformed state");
  }
  return rng;
}

}  // namespace venngan
