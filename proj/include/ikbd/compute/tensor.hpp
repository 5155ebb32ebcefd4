#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ikbd/error.hpp"

namespace ikbd::compute {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
using RowVector = Eigen::Matrix<T, 1, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Derived>
void check_finite(const Eigen::DenseBase<Derived>& m, std::string_view what) {
  if (!m.allFinite()) throw NumericError(std::string("non-finite value in ") + std::string(what));
}

/// Dense row-major tensor of rank 1 or 2.
///
/// Values live in an Eigen matrix; a rank-1 tensor of extent n is stored as
/// a 1 x n row. Every primitive in this module works on that matrix view.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
    validate_shape();
    values_ = Matrix<T>::Zero(rows(), cols());
  }

  Tensor(std::vector<std::size_t> shape, Matrix<T> values)
      : shape_(std::move(shape)), values_(std::move(values)) {
    validate_shape();
    if (values_.rows() != rows() || values_.cols() != cols()) {
      throw ShapeError("tensor values do not match shape");
    }
  }

  static Tensor from_matrix(Matrix<T> m) {
    std::vector<std::size_t> shape{static_cast<std::size_t>(m.rows()),
                                   static_cast<std::size_t>(m.cols())};
    return Tensor(std::move(shape), std::move(m));
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const {
    return std::accumulate(shape_.begin(), shape_.end(), std::size_t{1}, std::multiplies<>());
  }
  Eigen::Index rows() const { return shape_.size() == 2 ? Eigen::Index(shape_[0]) : 1; }
  Eigen::Index cols() const { return Eigen::Index(shape_.back()); }

  Matrix<T>& mat() { return values_; }
  const Matrix<T>& mat() const { return values_; }

  std::span<T> values() { return {values_.data(), size()}; }
  std::span<const T> values() const { return {values_.data(), size()}; }

  void set_zero() { values_.setZero(); }
  void check_finite(std::string_view what) const { compute::check_finite(values_, what); }

  template <typename U>
  Tensor<U> cast() const {
    return Tensor<U>(shape_, values_.template cast<U>());
  }

  bool operator==(const Tensor& o) const { return shape_ == o.shape_ && values_ == o.values_; }

 private:
  void validate_shape() const {
    if (shape_.empty() || shape_.size() > 2) throw ShapeError("tensor rank must be 1 or 2");
    for (auto e : shape_) {
      if (e == 0) throw ShapeError("tensor extents must be positive");
    }
  }

  std::vector<std::size_t> shape_;
  Matrix<T> values_;
};

/// A learnable tensor plus its accumulated gradient.
template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  Parameter() = default;
  Parameter(std::string n, std::vector<std::size_t> shape)
      : name(std::move(n)), value(shape), grad(shape) {}

  Matrix<T>& w() { return value.mat(); }
  const Matrix<T>& w() const { return value.mat(); }
  Matrix<T>& g() { return grad.mat(); }
  const Matrix<T>& g() const { return grad.mat(); }

  void zero_grad() { grad.set_zero(); }
};

/// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)]. Draws in double so float and
/// double models built from one seed hold the same values up to rounding.
template <typename T>
void init_uniform(Parameter<T>& p, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : p.value.values()) v = static_cast<T>(dist(rng));
}

}  // namespace ikbd::compute
