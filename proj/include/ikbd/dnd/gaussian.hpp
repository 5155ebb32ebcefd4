#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <json.hpp>

#include "ikbd/core/types.hpp"
#include "ikbd/dnd/decoder.hpp"

namespace ikbd::dnd {

/// Classical per-key bivariate Gaussian touch model with diagonal
/// covariance. Each point is decoded independently by maximum likelihood
/// with a flat prior over symbols.
class GaussianBaseline : public Decoder {
 public:
  struct KeyModel {
    double mean_x = 0.0, mean_y = 0.0;
    double var_x = 0.0, var_y = 0.0;
  };

  /// Smallest variance allowed per axis, in squared normalized units; keeps
  /// noise-free fits decodable.
  static constexpr double kVarianceFloor = 1e-12;

  static GaussianBaseline fit(const Dataset& train) {
    std::array<double, CharacterDictionary::kTypeable> n{}, sx{}, sy{}, sxx{}, syy{};
    for (const auto& s : train.samples) {
      for (std::size_t i = 0; i < s.phrase.size(); ++i) {
        const auto k = std::size_t(CharacterDictionary::index_of(s.phrase[i]));
        const auto& p = s.touches[i];
        n[k] += 1;
        sx[k] += p.x;
        sy[k] += p.y;
      }
    }
    std::string missing;
    for (int k = 0; k < CharacterDictionary::kTypeable; ++k) {
      if (n[std::size_t(k)] < 2) missing += (missing.empty() ? "" : ", ") + CharacterDictionary::display_name(k);
    }
    if (!missing.empty()) throw ValidationError("gaussian fit needs >= 2 touches per symbol; missing: " + missing);

    GaussianBaseline g;
    for (std::size_t k = 0; k < g.keys_.size(); ++k) {
      g.keys_[k].mean_x = sx[k] / n[k];
      g.keys_[k].mean_y = sy[k] / n[k];
    }
    // second pass around the means for numerically stable variances
    for (const auto& s : train.samples) {
      for (std::size_t i = 0; i < s.phrase.size(); ++i) {
        const auto k = std::size_t(CharacterDictionary::index_of(s.phrase[i]));
        const double dx = s.touches[i].x - g.keys_[k].mean_x;
        const double dy = s.touches[i].y - g.keys_[k].mean_y;
        sxx[k] += dx * dx;
        syy[k] += dy * dy;
      }
    }
    for (std::size_t k = 0; k < g.keys_.size(); ++k) {
      g.keys_[k].var_x = std::max(sxx[k] / (n[k] - 1), kVarianceFloor);
      g.keys_[k].var_y = std::max(syy[k] / (n[k] - 1), kVarianceFloor);
    }
    return g;
  }

  double log_likelihood(int symbol, const TouchPoint& p) const {
    const auto& k = keys_.at(std::size_t(symbol));
    const double dx = p.x - k.mean_x;
    const double dy = p.y - k.mean_y;
    return -0.5 * (dx * dx / k.var_x + dy * dy / k.var_y + std::log(k.var_x) + std::log(k.var_y)) -
           std::log(2.0 * std::numbers::pi);
  }

  std::string decode(std::span<const TouchPoint> touches) const override {
    std::string out;
    out.reserve(touches.size());
    for (const auto& p : touches) {
      int best = 0;
      double best_ll = -std::numeric_limits<double>::infinity();
      for (int k = 0; k < CharacterDictionary::kTypeable; ++k) {
        const double ll = log_likelihood(k, p);
        if (ll > best_ll) {
          best_ll = ll;
          best = k;
        }
      }
      out.push_back(CharacterDictionary::symbol_at(best));
    }
    return out;
  }

  std::string name() const override { return "gaussian-baseline"; }

  const KeyModel& key(int symbol) const { return keys_.at(std::size_t(symbol)); }

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& k : keys_) j.push_back({k.mean_x, k.mean_y, k.var_x, k.var_y});
    return j;
  }

 private:
  std::array<KeyModel, CharacterDictionary::kTypeable> keys_{};
};

}  // namespace ikbd::dnd
