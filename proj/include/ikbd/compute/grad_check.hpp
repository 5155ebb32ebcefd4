#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "ikbd/compute/tensor.hpp"

namespace ikbd::compute {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  std::size_t entries_checked = 0;
};

struct GradCheckOptions {
  double epsilon = 1e-5;
  /// Check at most this many entries per parameter (chosen at random with
  /// `seed`); 0 checks every entry.
  std::size_t max_entries_per_parameter = 0;
  std::uint64_t seed = 0;
};

/// Compares analytic gradients to central differences.
///
/// `compute_grads` must zero and refill every parameter's grad; `loss` must
/// evaluate the same scalar from the current parameter values without
/// touching grads. The error for each entry is
/// |analytic - numeric| / max(1, |analytic|).
template <typename T, typename LossFn, typename GradFn>
GradCheckReport grad_check(LossFn&& loss, GradFn&& compute_grads, const std::vector<Parameter<T>*>& params,
                           const GradCheckOptions& opt = {}) {
  if (!(opt.epsilon >= 1e-7 && opt.epsilon <= 1e-3)) {
    throw ConfigError("grad_check epsilon must lie in [1e-7, 1e-3]");
  }
  compute_grads();
  std::mt19937_64 rng(opt.seed);
  GradCheckReport report;
  for (Parameter<T>* p : params) {
    auto values = p->value.values();
    const auto grads = p->grad.values();
    std::vector<std::size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), 0);
    if (opt.max_entries_per_parameter && idx.size() > opt.max_entries_per_parameter) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(opt.max_entries_per_parameter);
      std::sort(idx.begin(), idx.end());
    }
    for (std::size_t i : idx) {
      const T saved = values[i];
      values[i] = saved + T(opt.epsilon);
      const double up = static_cast<double>(loss());
      values[i] = saved - T(opt.epsilon);
      const double down = static_cast<double>(loss());
      values[i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) throw NumericError("non-finite loss in grad_check");
      const double numeric = (up - down) / (2.0 * opt.epsilon);
      const double analytic = static_cast<double>(grads[i]);
      const double err = std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
      ++report.entries_checked;
      if (err > report.max_rel_error || report.worst_parameter.empty()) {
        report.max_rel_error = err;
        report.worst_parameter = p->name;
        report.worst_index = i;
      }
    }
  }
  return report;
}

}  // namespace ikbd::compute
