#pragma once

#include <array>
#include <cmath>
#include <numbers>

#include "ikbd/core/dictionary.hpp"

namespace ikbd::sim {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double norm() const { return std::hypot(x, y); }
  bool operator==(const Vec2&) const = default;
};

inline Vec2 rotate(Vec2 v, double degrees) {
  const double a = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(a);
  const double s = std::sin(a);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

using KeyCenters = std::array<Vec2, CharacterDictionary::kTypeable>;

/// Reference QWERTY geometry in key-pitch units (column, row), y pointing
/// down. Letter rows are indented 0, 0.25 and 0.75 pitches; the space row
/// sits below the third letter row. The nominal board is 10 columns by 4
/// rows; enter hangs off the right end of the home row.
inline KeyCenters qwerty_grid() {
  KeyCenters g{};
  auto place = [&](const char* row, double indent, double y) {
    for (int i = 0; row[i]; ++i) {
      g[std::size_t(CharacterDictionary::index_of(row[i]))] = {indent + i + 0.5, y};
    }
  };
  place("qwertyuiop", 0.0, 0.5);
  place("asdfghjkl'\n", 0.25, 1.5);
  place("zxcvbnm.", 0.75, 2.5);
  g[CharacterDictionary::kSpace] = {5.0, 3.5};
  return g;
}

inline constexpr int kGridColumns = 10;
inline constexpr int kGridRows = 4;

/// Key centers in mm relative to the board center for a board of the given
/// nominal size.
inline KeyCenters reference_template(double width_mm = 259.0, double height_mm = 125.9) {
  const double px = width_mm / kGridColumns;
  const double py = height_mm / kGridRows;
  KeyCenters out = qwerty_grid();
  for (auto& k : out) k = {(k.x - kGridColumns / 2.0) * px, (k.y - kGridRows / 2.0) * py};
  return out;
}

}  // namespace ikbd::sim
