#pragma once

#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ikbd/core/dictionary.hpp"
#include "ikbd/error.hpp"

namespace ikbd {

/// Physical screen used to normalize coordinates. Defaults to a 23" 1080p
/// panel (555 x 338 mm).
struct ScreenSpec {
  double width_mm = 555.0;
  double height_mm = 338.0;
  int width_px = 1920;
  int height_px = 1080;

  double mm_per_px_x() const { return width_mm / width_px; }
  double mm_per_px_y() const { return height_mm / height_px; }
  double mm_to_norm_x(double mm) const { return mm / width_mm; }
  double mm_to_norm_y(double mm) const { return mm / height_mm; }
  double px_to_norm_x(double px) const { return px / width_px; }
  double px_to_norm_y(double px) const { return px / height_px; }

  bool operator==(const ScreenSpec&) const = default;
};

/// One touch in normalized screen units.
struct TouchPoint {
  double x = 0.0;
  double y = 0.0;
  std::optional<double> t_ms;

  bool operator==(const TouchPoint&) const = default;
};

struct TouchSample {
  std::string user_id;
  std::string phrase;  // '\n' is the enter symbol
  std::vector<TouchPoint> touches;

  bool operator==(const TouchSample&) const = default;
};

/// Throws ValidationError if `s` breaks a TouchSample invariant. `where`
/// prefixes the message so callers can name the record.
inline void validate_sample(const TouchSample& s, const std::string& where = "sample") {
  if (s.phrase.empty()) throw ValidationError(where + ": empty phrase");
  if (s.phrase.size() != s.touches.size()) {
    throw ValidationError(where + ": phrase has " + std::to_string(s.phrase.size()) +
                          " symbols but " + std::to_string(s.touches.size()) + " touches");
  }
  for (char c : s.phrase) {
    if (!CharacterDictionary::is_typeable(c)) {
      throw ValidationError(where + ": phrase contains a non-typeable symbol (code " +
                            std::to_string(int(c)) + ")");
    }
  }
  std::optional<double> last_t;
  for (const auto& p : s.touches) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw ValidationError(where + ": non-finite touch coordinate");
    }
    if (p.t_ms) {
      if (last_t && *p.t_ms < *last_t) throw ValidationError(where + ": timestamps decrease");
      last_t = p.t_ms;
    }
  }
}

struct Dataset {
  std::vector<TouchSample> samples;
  ScreenSpec screen;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }

  /// Distinct user ids in sorted order.
  std::vector<std::string> users() const {
    std::set<std::string> ids;
    for (const auto& s : samples) ids.insert(s.user_id);
    return {ids.begin(), ids.end()};
  }

  std::size_t keystrokes() const {
    std::size_t n = 0;
    for (const auto& s : samples) n += s.touches.size();
    return n;
  }

  bool operator==(const Dataset&) const = default;
};

}  // namespace ikbd
