#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string>

#include "venngan/tensor.hpp"

namespace venngan {

/// Seeded random stream. The full state (engine plus the normal
/// distribution's cached deviate) round-trips through serialize().
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  /// Independent stream keyed by (seed, stream ids).
  static Rng derived(std::uint64_t seed, std::initializer_list<std::uint64_t> stream);

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);

  Tensor normal_tensor(std::size_t rows, std::size_t cols, double mean = 0.0, double stddev = 1.0);
  Tensor uniform_tensor(std::size_t rows, std::size_t cols, double lo, double hi);

  std::string serialize() const;
  static Rng deserialize(const std::string& state);

  friend bool operator==(const Rng& a, const Rng& b) { return a.serialize() == b.serialize(); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace venngan
