#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ikbd/core/phrase.hpp"
#include "ikbd/core/types.hpp"
#include "ikbd/error.hpp"
#include "ikbd/sim/layout.hpp"

namespace ikbd::sim {

/// Parameters of the synthetic typist population. Scale and size defaults
/// are the measured user statistics; offsets are given in pixels of `screen`.
struct SimConfig {
  std::size_t n_users = 12;
  std::size_t phrases_per_user = 150;
  double scale_h_mean = 0.96;
  double scale_h_std = 0.16;
  double scale_v_mean = 1.00;
  double scale_v_std = 0.13;
  double keyboard_width_mm = 259.0;
  double keyboard_height_mm = 125.9;
  double offset_std_px_x = 75.81;
  double offset_std_px_y = 44.69;
  double tap_sigma_mm = 2.5;
  double drift_step_mm = 0.8;
  double rotation_range_deg = 15.0;
  std::uint64_t seed = 1234;
  ScreenSpec screen;

  void validate() const {
    if (n_users < 1 || phrases_per_user < 1) throw ConfigError("simulator counts must be >= 1");
    for (double s : {scale_h_std, scale_v_std, offset_std_px_x, offset_std_px_y, tap_sigma_mm,
                     drift_step_mm, rotation_range_deg}) {
      if (!(s >= 0.0)) throw ConfigError("simulator spreads must be >= 0");
    }
    if ((scale_h_std == 0.0 && scale_h_mean <= 0.5) || (scale_v_std == 0.0 && scale_v_mean <= 0.5)) {
      throw ConfigError("scale mean must exceed 0.5 when its spread is zero");
    }
    if (keyboard_width_mm <= 0.0 || keyboard_height_mm <= 0.0) throw ConfigError("keyboard size must be positive");
  }
};

/// One simulated user's imagined keyboard.
struct MentalModel {
  KeyCenters key_centers{};  // template at nominal size, mm relative to board center
  double scale_h = 1.0;
  double scale_v = 1.0;
  double rotation_deg = 0.0;
  Vec2 offset_mm;  // drift state, added to the screen center
  double tap_sigma_mm = 0.0;
  double drift_step_mm = 0.0;
  ScreenSpec screen;

  /// Where the user believes `symbol_index` is, in screen mm.
  Vec2 key_position_mm(int symbol_index) const {
    if (symbol_index < 0 || symbol_index >= CharacterDictionary::kTypeable) {
      throw ValidationError("no key center for symbol index " + std::to_string(symbol_index));
    }
    const Vec2 k = key_centers[std::size_t(symbol_index)];
    const Vec2 scaled{k.x * scale_h, k.y * scale_v};
    const Vec2 center{screen.width_mm / 2.0, screen.height_mm / 2.0};
    return rotate(scaled, rotation_deg) + center + offset_mm;
  }

  Vec2 key_position_mm(char symbol) const {
    auto i = CharacterDictionary::find(symbol);
    if (!i) throw ValidationError("no key center for symbol");
    return key_position_mm(*i);
  }
};

namespace detail {

inline double normal(std::mt19937_64& rng, double mean, double sd) {
  if (sd == 0.0) return mean;
  return std::normal_distribution<double>(mean, sd)(rng);
}

inline double truncated_normal_above(std::mt19937_64& rng, double mean, double sd, double floor) {
  if (sd == 0.0) return mean;
  for (;;) {
    double v = normal(rng, mean, sd);
    if (v > floor) return v;
  }
}

inline std::mt19937_64 stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(a), std::uint32_t(b)};
  return std::mt19937_64(seq);
}

}  // namespace detail

inline MentalModel sample_mental_model(const SimConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  MentalModel m;
  m.screen = cfg.screen;
  m.key_centers = reference_template(cfg.keyboard_width_mm, cfg.keyboard_height_mm);
  m.scale_h = detail::truncated_normal_above(rng, cfg.scale_h_mean, cfg.scale_h_std, 0.5);
  m.scale_v = detail::truncated_normal_above(rng, cfg.scale_v_mean, cfg.scale_v_std, 0.5);
  if (cfg.rotation_range_deg > 0.0) {
    m.rotation_deg =
        std::uniform_real_distribution<double>(-cfg.rotation_range_deg, cfg.rotation_range_deg)(rng);
  }
  m.offset_mm.x = detail::normal(rng, 0.0, cfg.offset_std_px_x * cfg.screen.mm_per_px_x());
  m.offset_mm.y = detail::normal(rng, 0.0, cfg.offset_std_px_y * cfg.screen.mm_per_px_y());
  m.tap_sigma_mm = cfg.tap_sigma_mm;
  m.drift_step_mm = cfg.drift_step_mm;
  return m;
}

/// Types `phrase` with the user's current mental model, then advances the
/// drift random walk by one step.
inline TouchSample type_phrase(MentalModel& m, const std::string& phrase, std::mt19937_64& rng,
                               std::string user_id = {}) {
  if (phrase.empty()) throw ValidationError("cannot type an empty phrase");
  TouchSample s;
  s.user_id = std::move(user_id);
  s.phrase = phrase;
  s.touches.reserve(phrase.size());
  for (char c : phrase) {
    auto idx = CharacterDictionary::find(c);
    if (!idx || *idx == CharacterDictionary::kPad) {
      throw ValidationError("symbol has no key center (code " + std::to_string(int(c)) + ")");
    }
    Vec2 p = m.key_position_mm(*idx);
    p.x += detail::normal(rng, 0.0, m.tap_sigma_mm);
    p.y += detail::normal(rng, 0.0, m.tap_sigma_mm);
    s.touches.push_back({std::clamp(m.screen.mm_to_norm_x(p.x), 0.0, 1.0),
                         std::clamp(m.screen.mm_to_norm_y(p.y), 0.0, 1.0), std::nullopt});
  }
  m.offset_mm.x += detail::normal(rng, 0.0, m.drift_step_mm);
  m.offset_mm.y += detail::normal(rng, 0.0, m.drift_step_mm);
  return s;
}

inline std::string user_name(std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "u%02zu", index);
  return buf;
}

/// Simulates `cfg.n_users` typists, each typing `cfg.phrases_per_user`
/// phrases made of two random corpus sentences joined by enter. Every user
/// draws from an independent stream derived from (seed, user index).
inline Dataset simulate_dataset(const SimConfig& cfg, const std::vector<std::string>& sentences) {
  cfg.validate();
  if (sentences.empty()) throw ValidationError("corpus has no usable sentences");
  Dataset d;
  d.screen = cfg.screen;
  for (std::size_t u = 0; u < cfg.n_users; ++u) {
    auto rng = detail::stream(cfg.seed, u);
    MentalModel m = sample_mental_model(cfg, rng);
    std::uniform_int_distribution<std::size_t> pick(0, sentences.size() - 1);
    for (std::size_t k = 0; k < cfg.phrases_per_user; ++k) {
      const auto& a = sentences[pick(rng)];
      const auto& b = sentences[pick(rng)];
      d.samples.push_back(type_phrase(m, preprocess_phrase(a, b), rng, user_name(u)));
    }
  }
  return d;
}

/// Returns the input followed by `copies` rigidly translated copies. Each
/// copy of a sample is shifted by one offset drawn uniformly in
/// +-max_offset_px, then clamped to the screen.
inline Dataset augment_offsets(const Dataset& d, std::size_t copies, double max_offset_px_x,
                               double max_offset_px_y, std::mt19937_64& rng) {
  if (copies < 1) throw ConfigError("augmentation needs at least one copy");
  Dataset out;
  out.screen = d.screen;
  out.samples.reserve(d.size() * (copies + 1));
  out.samples = d.samples;
  auto draw = [&](double bound) {
    return bound > 0.0 ? std::uniform_real_distribution<double>(-bound, bound)(rng) : 0.0;
  };
  for (std::size_t c = 0; c < copies; ++c) {
    for (const auto& s : d.samples) {
      const double dx = d.screen.px_to_norm_x(draw(max_offset_px_x));
      const double dy = d.screen.px_to_norm_y(draw(max_offset_px_y));
      TouchSample t = s;
      for (auto& p : t.touches) {
        p.x = std::clamp(p.x + dx, 0.0, 1.0);
        p.y = std::clamp(p.y + dy, 0.0, 1.0);
      }
      out.samples.push_back(std::move(t));
    }
  }
  return out;
}

/// Per-axis scale from the space-to-'p' vector of one sample: the mean 'p'
/// touch minus the mean space touch, un-rotated, divided by the same vector
/// on the reference template. Empty if the phrase lacks either key.
inline std::optional<std::pair<double, double>> estimate_scale_space_p(const TouchSample& s,
                                                                       const ScreenSpec& screen,
                                                                       double rotation_deg,
                                                                       const KeyCenters& reference) {
  Vec2 sum_p, sum_space;
  int n_p = 0, n_space = 0;
  for (std::size_t i = 0; i < s.phrase.size(); ++i) {
    const Vec2 mm{s.touches[i].x * screen.width_mm, s.touches[i].y * screen.height_mm};
    if (s.phrase[i] == 'p') {
      sum_p = sum_p + mm;
      ++n_p;
    } else if (s.phrase[i] == ' ') {
      sum_space = sum_space + mm;
      ++n_space;
    }
  }
  if (!n_p || !n_space) return std::nullopt;
  const Vec2 measured = rotate(sum_p * (1.0 / n_p) - sum_space * (1.0 / n_space), -rotation_deg);
  const Vec2 ref = reference[std::size_t(CharacterDictionary::index_of('p'))] -
                   reference[CharacterDictionary::kSpace];
  return std::make_pair(measured.x / ref.x, measured.y / ref.y);
}

}  // namespace ikbd::sim
