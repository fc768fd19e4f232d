#pragma once

#include <cstddef>
#include <initializer_list>
#include <new>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace venngan {

/// Raised when an operation would produce (or receives) NaN or Inf.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised on incompatible tensor shapes.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& shape);

/// Cache-line aligned storage. Vectorized kernels peel unaligned leading
/// elements, so without a fixed alignment the summation order (and the last
/// bits of results) would depend on where the heap placed a buffer.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlignment{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlignment)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlignment); }

  template <typename U>
  friend bool operator==(const AlignedAllocator&, const AlignedAllocator<U>&) {
    return true;
  }
};

using AlignedDoubles = std::vector<double, AlignedAllocator<double>>;

/// Dense row-major 2-D array of doubles. Rows index the batch, columns the
/// features. All entries are finite; constructors reject NaN/Inf.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0);
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> values);
  Tensor(std::initializer_list<std::initializer_list<double>> rows);

  static Tensor zeros(std::size_t rows, std::size_t cols) { return Tensor(rows, cols, 0.0); }
  static Tensor ones(std::size_t rows, std::size_t cols) { return Tensor(rows, cols, 1.0); }

  std::size_t rows() const { return shape_.rows; }
  std::size_t cols() const { return shape_.cols; }
  Shape shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }

  double operator()(std::size_t r, std::size_t c) const { return values_[r * shape_.cols + c]; }
  double& operator()(std::size_t r, std::size_t c) { return values_[r * shape_.cols + c]; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values_).subspan(r * shape_.cols, shape_.cols);
  }

  const double* data() const { return values_.data(); }
  double* data() { return values_.data(); }

  /// Throws NumericError naming `context` if any entry is not finite.
  void require_finite(const std::string& context) const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_{};
  AlignedDoubles values_;
};

}  // namespace venngan
