#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/StdVector>

#include "rolecast/error.hpp"

namespace rolecast {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

/// Dense row-major tensor of doubles. Value type; copies are deep. Storage is
/// aligned to Eigen's vector width so GEMM kernels take the same path on every run.
class Tensor {
 public:
  using Shape = std::vector<std::size_t>;
  using Storage = std::vector<double, Eigen::aligned_allocator<double>>;

  Tensor() = default;

  explicit Tensor(Shape shape, double fill = 0.0) : shape_(std::move(shape)) {
    for (auto d : shape_) require(d > 0, ErrorCategory::shape, "tensor dimensions must be positive");
    data_.assign(product(shape_), fill);
  }

  Tensor(Shape shape, const std::vector<double>& values)
      : Tensor(std::move(shape), Storage(values.begin(), values.end())) {}

  Tensor(Shape shape, std::initializer_list<double> values)
      : Tensor(std::move(shape), Storage(values.begin(), values.end())) {}

  Tensor(Shape shape, Storage values) : shape_(std::move(shape)), data_(std::move(values)) {
    require(data_.size() == product(shape_), ErrorCategory::shape,
            "tensor data length " + std::to_string(data_.size()) + " does not match shape " + describe(shape_));
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
  double& at(std::size_t i, std::size_t j, std::size_t k) { return data_[(i * shape_[1] + j) * shape_[2] + k]; }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  /// Same data viewed under a different shape of equal element count.
  Tensor reshaped(Shape shape) const { return Tensor(std::move(shape), data_); }

  /// Row-major matrix view; rows * cols must equal size().
  MatrixMap matrix(std::size_t rows, std::size_t cols) {
    require(rows * cols == size(), ErrorCategory::shape, "matrix view size mismatch");
    return MatrixMap(data_.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  }
  ConstMatrixMap matrix(std::size_t rows, std::size_t cols) const {
    require(rows * cols == size(), ErrorCategory::shape, "matrix view size mismatch");
    return ConstMatrixMap(data_.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  }

  bool operator==(const Tensor&) const = default;

  static std::size_t product(const Shape& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
  }

  static std::string describe(const Shape& s) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ']';
    return os.str();
  }

 private:
  Shape shape_;
  Storage data_;
};

inline void require_shape(const Tensor& t, const Tensor::Shape& expected, const char* what) {
  require(t.shape() == expected, ErrorCategory::shape,
          std::string(what) + ": expected shape " + Tensor::describe(expected) + ", got " +
              Tensor::describe(t.shape()));
}

}  // namespace rolecast
