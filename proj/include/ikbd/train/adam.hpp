#pragma once

#include <cmath>
#include <vector>

#include "ikbd/compute/tensor.hpp"

namespace ikbd::train {

using compute::Matrix;
using compute::Parameter;

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias-corrected moments. Moments are allocated lazily on the
/// first step to match the parameter list it is given.
template <typename T>
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  void step(const std::vector<Parameter<T>*>& params, double lr) {
    if (first_.empty()) {
      for (auto* p : params) {
        first_.push_back(Matrix<T>::Zero(p->w().rows(), p->w().cols()));
        second_.push_back(Matrix<T>::Zero(p->w().rows(), p->w().cols()));
      }
    }
    if (first_.size() != params.size()) throw ShapeError("adam: parameter list changed");
    for (auto* p : params) {
      if (!p->g().allFinite()) throw NumericError("non-finite gradient in " + p->name);
    }
    ++steps_;
    const T b1 = T(cfg_.beta1), b2 = T(cfg_.beta2);
    const T c1 = T(1.0 - std::pow(cfg_.beta1, double(steps_)));
    const T c2 = T(1.0 - std::pow(cfg_.beta2, double(steps_)));
    const T rate = T(lr), eps = T(cfg_.epsilon);
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& m = first_[i];
      auto& v = second_[i];
      const auto& g = params[i]->g();
      if (m.rows() != g.rows() || m.cols() != g.cols()) throw ShapeError("adam: moment shape mismatch");
      m = b1 * m + (T(1) - b1) * g;
      v = (b2 * v.array() + (T(1) - b2) * g.array().square()).matrix();
      params[i]->w().array() -= rate * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    }
  }

  long steps() const { return steps_; }
  const std::vector<Matrix<T>>& first_moments() const { return first_; }
  const std::vector<Matrix<T>>& second_moments() const { return second_; }

 private:
  AdamConfig cfg_;
  long steps_ = 0;
  std::vector<Matrix<T>> first_;
  std::vector<Matrix<T>> second_;
};

/// Rescales all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
template <typename T>
double clip_grad_norm(const std::vector<Parameter<T>*>& params, double max_norm) {
  double sq = 0.0;
  for (auto* p : params) sq += double(p->g().squaredNorm());
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const T s = T(max_norm / norm);
    for (auto* p : params) p->g() *= s;
  }
  return norm;
}

}  // namespace ikbd::train
