#pragma once

#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "ikbd/compute/tensor.hpp"

// Forward/backward pairs for every primitive the decoder uses. Backward
// functions accumulate (+=) into gradient outputs so shared parameters and
// fan-out sum naturally.

namespace ikbd::compute {

template <typename T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " times " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  Matrix<T> c(a.rows(), b.cols());
  c.noalias() = a * b;
  check_finite(c, "matmul");
  return c;
}

/// da += dc * b^T, db += a^T * dc. Either output may be null.
template <typename T>
void matmul_backward(const Matrix<T>& a, const Matrix<T>& b, const Matrix<T>& dc, Matrix<T>* da,
                     Matrix<T>* db) {
  if (da) da->noalias() += dc * b.transpose();
  if (db) db->noalias() += a.transpose() * dc;
}

template <typename T>
Matrix<T> add_bias(const Matrix<T>& x, const Matrix<T>& bias) {
  if (bias.rows() != 1 || bias.cols() != x.cols()) throw ShapeError("add_bias: width mismatch");
  Matrix<T> y = x;
  y.rowwise() += bias.row(0);
  check_finite(y, "add_bias");
  return y;
}

template <typename T>
void add_bias_backward(const Matrix<T>& dy, Matrix<T>& dbias) {
  dbias.row(0) += dy.colwise().sum();
}

template <typename T>
Matrix<T> sigmoid(const Matrix<T>& x) {
  Matrix<T> y = (T(1) / (T(1) + (-x.array()).exp())).matrix();
  check_finite(y, "sigmoid");
  return y;
}

/// Gradient through y = sigmoid(x), expressed with the forward output y.
template <typename T>
Matrix<T> sigmoid_backward(const Matrix<T>& y, const Matrix<T>& dy) {
  return (dy.array() * y.array() * (T(1) - y.array())).matrix();
}

template <typename T>
Matrix<T> tanh(const Matrix<T>& x) {
  Matrix<T> y = x.array().tanh().matrix();
  check_finite(y, "tanh");
  return y;
}

template <typename T>
Matrix<T> tanh_backward(const Matrix<T>& y, const Matrix<T>& dy) {
  return (dy.array() * (T(1) - y.array().square())).matrix();
}

/// Column-wise concatenation [a | b].
template <typename T>
Matrix<T> concat(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.rows() != b.rows()) throw ShapeError("concat: row count mismatch");
  Matrix<T> y(a.rows(), a.cols() + b.cols());
  y.leftCols(a.cols()) = a;
  y.rightCols(b.cols()) = b;
  return y;
}

/// Splits an upstream gradient of concat(a, b) back into (da, db).
template <typename T>
std::pair<Matrix<T>, Matrix<T>> concat_backward(const Matrix<T>& dy, Eigen::Index left_cols) {
  return {dy.leftCols(left_cols), dy.rightCols(dy.cols() - left_cols)};
}

template <typename T>
Matrix<T> slice(const Matrix<T>& x, Eigen::Index begin, Eigen::Index count) {
  if (begin < 0 || count <= 0 || begin + count > x.cols()) throw ShapeError("slice out of range");
  return x.middleCols(begin, count);
}

template <typename T>
void slice_backward(const Matrix<T>& dy, Eigen::Index begin, Matrix<T>& dx) {
  dx.middleCols(begin, dy.cols()) += dy;
}

template <typename T>
Matrix<T> embedding_lookup(const Matrix<T>& table, std::span<const int> indices) {
  Matrix<T> y(static_cast<Eigen::Index>(indices.size()), table.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || indices[i] >= table.rows()) {
      throw ShapeError("embedding index " + std::to_string(indices[i]) + " out of range");
    }
    y.row(Eigen::Index(i)) = table.row(indices[i]);
  }
  return y;
}

template <typename T>
void embedding_backward(std::span<const int> indices, const Matrix<T>& dy, Matrix<T>& dtable) {
  for (std::size_t i = 0; i < indices.size(); ++i) dtable.row(indices[i]) += dy.row(Eigen::Index(i));
}

/// Row-wise softmax, max-shifted.
template <typename T>
Matrix<T> softmax(const Matrix<T>& logits) {
  Matrix<T> p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const T m = logits.row(i).maxCoeff();
    p.row(i) = (logits.row(i).array() - m).exp().matrix();
    p.row(i) /= p.row(i).sum();
  }
  check_finite(p, "softmax");
  return p;
}

/// dlogits for p = softmax(logits): p * (dp - <dp, p>) per row.
template <typename T>
Matrix<T> softmax_backward(const Matrix<T>& p, const Matrix<T>& dp) {
  Matrix<T> dx(p.rows(), p.cols());
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const T dot = p.row(i).dot(dp.row(i));
    dx.row(i) = (p.row(i).array() * (dp.row(i).array() - dot)).matrix();
  }
  return dx;
}

template <typename T>
struct CrossEntropy {
  T loss = T(0);        // mean over counted rows
  Matrix<T> probs;      // softmax of the logits
  std::size_t count = 0;  // rows whose target is not ignored
};

/// Mean softmax cross-entropy over rows whose target differs from
/// `ignore_index`. Returns zero loss when every row is ignored.
template <typename T>
CrossEntropy<T> softmax_cross_entropy(const Matrix<T>& logits, std::span<const int> targets,
                                      int ignore_index) {
  if (static_cast<Eigen::Index>(targets.size()) != logits.rows()) {
    throw ShapeError("cross entropy: target count does not match logits rows");
  }
  CrossEntropy<T> out;
  out.probs = softmax(logits);
  T total = T(0);
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const int t = targets[std::size_t(i)];
    if (t == ignore_index) continue;
    if (t < 0 || t >= logits.cols()) throw ShapeError("cross entropy target out of range");
    const T m = logits.row(i).maxCoeff();
    const T lse = m + std::log((logits.row(i).array() - m).exp().sum());
    total += lse - logits(i, t);
    ++out.count;
  }
  out.loss = out.count ? total / T(out.count) : T(0);
  if (!std::isfinite(static_cast<double>(out.loss))) throw NumericError("non-finite cross entropy");
  return out;
}

/// dlogits of scale * mean cross-entropy.
template <typename T>
Matrix<T> softmax_cross_entropy_backward(const CrossEntropy<T>& ce, std::span<const int> targets,
                                         int ignore_index, T scale = T(1)) {
  Matrix<T> d = Matrix<T>::Zero(ce.probs.rows(), ce.probs.cols());
  if (ce.count == 0) return d;
  const T k = scale / T(ce.count);
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    const int t = targets[std::size_t(i)];
    if (t == ignore_index) continue;
    d.row(i) = ce.probs.row(i) * k;
    d(i, t) -= k;
  }
  return d;
}

/// Affine map y = x W + b with W stored in x out.
template <typename T>
struct Linear {
  Parameter<T> weight;
  Parameter<T> bias;

  Linear() = default;
  Linear(const std::string& name, std::size_t in, std::size_t out)
      : weight(name + ".weight", {in, out}), bias(name + ".bias", {out}) {}

  Eigen::Index in_dim() const { return weight.w().rows(); }
  Eigen::Index out_dim() const { return weight.w().cols(); }

  void init(std::mt19937_64& rng) {
    init_uniform(weight, std::size_t(in_dim()), rng);
    bias.value.set_zero();
  }

  Matrix<T> forward(const Matrix<T>& x) const { return add_bias(matmul(x, weight.w()), bias.w()); }

  /// Accumulates parameter gradients; returns dx.
  Matrix<T> backward(const Matrix<T>& x, const Matrix<T>& dy) {
    add_bias_backward(dy, bias.g());
    Matrix<T> dx = Matrix<T>::Zero(x.rows(), x.cols());
    matmul_backward(x, weight.w(), dy, &dx, &weight.g());
    return dx;
  }

  template <typename F>
  void for_each_parameter(F&& f) {
    f(weight);
    f(bias);
  }
  template <typename F>
  void for_each_parameter(F&& f) const {
    f(weight);
    f(bias);
  }
};

}  // namespace ikbd::compute
