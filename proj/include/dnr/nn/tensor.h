// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DNR_NN_TENSOR_H_
#define DNR_NN_TENSOR_H_

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dnr::nn {

using Shape = std::vector<std::int64_t>;

// Fixed alignment keeps Eigen's vectorized reductions independent of where
// the heap places a buffer, so results are reproducible across runs.
using Buffer = std::vector<double, Eigen::aligned_allocator<double>>;

std::int64_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

using MatrixMap =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatrixMap = Eigen::Map<
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// Dense row-major float64 array.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, const std::vector<double>& data);
  Tensor(Shape shape, Buffer data);
  Tensor(Shape shape, std::initializer_list<double> data)
      : Tensor(std::move(shape), Buffer(data)) {}

  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::int64_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  Buffer& vec() { return data_; }
  const Buffer& vec() const { return data_; }
  std::vector<double> to_vector() const { return {data_.begin(), data_.end()}; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::int64_t i, std::int64_t j) { return data_[i * shape_[1] + j]; }
  double at(std::int64_t i, std::int64_t j) const {
    return data_[i * shape_[1] + j];
  }

  // The single value of a one-element tensor.
  double item() const;
  bool all_finite() const;
  Tensor reshaped(Shape shape) const;

  // View as (rows x cols) with cols = last dimension.
  MatrixMap matrix();
  ConstMatrixMap matrix() const;

  Tensor& operator+=(const Tensor& other);

  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_;
  Buffer data_;
};

}  // namespace dnr::nn

#endif  // DNR_NN_TENSOR_H_
