// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dnr/nn/tensor.h"

#include <cmath>
#include <sstream>

#include "dnr/common/error.h"

namespace dnr::nn {

std::int64_t numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  for (auto d : shape_) {
    if (d < 0) throw ShapeError("negative tensor dimension " + shape_str(shape_));
  }
  data_.assign(static_cast<std::size_t>(numel(shape_)), fill);
}

Tensor::Tensor(Shape shape, const std::vector<double>& data)
    : Tensor(std::move(shape), Buffer(data.begin(), data.end())) {}

Tensor::Tensor(Shape shape, Buffer data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (static_cast<std::int64_t>(data_.size()) != numel(shape_)) {
    throw ShapeError("tensor data size " + std::to_string(data_.size()) +
                     " does not match shape " + shape_str(shape_));
  }
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw ShapeError("item() on tensor of shape " + shape_str(shape_));
  }
  return data_[0];
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor Tensor::reshaped(Shape shape) const {
  return Tensor(std::move(shape), data_);
}

MatrixMap Tensor::matrix() {
  const std::int64_t cols = shape_.empty() ? 1 : shape_.back();
  const std::int64_t rows = cols == 0 ? 0 : numel(shape_) / cols;
  return MatrixMap(data_.data(), rows, cols);
}

ConstMatrixMap Tensor::matrix() const {
  const std::int64_t cols = shape_.empty() ? 1 : shape_.back();
  const std::int64_t rows = cols == 0 ? 0 : numel(shape_) / cols;
  return ConstMatrixMap(data_.data(), rows, cols);
}

Tensor& Tensor::operator+=(const Tensor& other) {
  if (other.shape_ != shape_) {
    throw ShapeError("tensor add: " + shape_str(shape_) + " vs " +
                     shape_str(other.shape_));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

}  // namespace dnr::nn
