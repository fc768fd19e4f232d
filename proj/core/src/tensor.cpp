#include "venngan/tensor.hpp"

#include <cmath>

namespace venngan {

std::string to_string(const Shape& shape) {
  return "(" + std::to_string(shape.rows) + "," + std::to_string(shape.cols) + ")";
}

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : shape_{rows, cols}, values_(rows * cols, fill) {
  if (rows == 0 || cols == 0) {
    throw ShapeError("tensor shape must be positive, got " + to_string(shape_));
  }
  if (!std::isfinite(fill)) {
    throw NumericError("tensor fill value is not finite");
  }
}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> values)
    : shape_{rows, cols}, values_(values.begin(), values.end()) {
  if (rows == 0 || cols == 0) {
    throw ShapeError("tensor shape must be positive, got " + to_string(shape_));
  }
  if (values_.size() != rows * cols) {
    throw ShapeError("tensor of shape " + to_string(shape_) + " given " +
                     std::to_string(values_.size()) + " values");
  }
  require_finite("tensor construction");
}

Tensor::Tensor(std::initializer_list<std::initializer_list<double>> rows) {
  if (rows.size() == 0 || rows.begin()->size() == 0) {
    throw ShapeError("tensor literal must be non-empty");
  }
  shape_ = {rows.size(), rows.begin()->size()};
  values_.reserve(shape_.size());
  for (const auto& r : rows) {
    if (r.size() != shape_.cols) {
      throw ShapeError("ragged tensor literal");
    }
    values_.insert(values_.end(), r.begin(), r.end());
  }
  require_finite("tensor construction");
}

void Tensor::require_finite(const std::string& context) const {
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!std::isfinite(values_[k])) {
      throw NumericError(context + ": non-finite value " + std::to_string(values_[k]) +
                         " at flat index " + std::to_string(k));
    }
  }
}

}  // namespace venngan
