#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "ikbd/error.hpp"

namespace ikbd {

/// The fixed 31-entry character dictionary.
///
/// Indices 0-25 are 'a'-'z', followed by space, enter ('\n'), period and
/// apostrophe. Index 30 is a padding symbol used only for batching; it is
/// never part of phrase text.
class CharacterDictionary {
 public:
  static constexpr int kSize = 31;
  static constexpr int kTypeable = 30;
  static constexpr int kSpace = 26;
  static constexpr int kEnter = 27;
  static constexpr int kPeriod = 28;
  static constexpr int kApostrophe = 29;
  static constexpr int kPad = 30;
  static constexpr char kPadSymbol = '#';

  static constexpr std::optional<int> find(char c) noexcept {
    if (c >= 'a' && c <= 'z') return c - 'a';
    switch (c) {
      case ' ': return kSpace;
      case '\n': return kEnter;
      case '.': return kPeriod;
      case '\'': return kApostrophe;
      case kPadSymbol: return kPad;
      default: return std::nullopt;
    }
  }

  static int index_of(char c) {
    auto i = find(c);
    if (!i) throw ValidationError("symbol not in dictionary: code " + std::to_string(int(c)));
    return *i;
  }

  static constexpr char symbol_at(int index) {
    if (index < 0 || index >= kSize) throw ValidationError("dictionary index out of range");
    if (index < 26) return static_cast<char>('a' + index);
    constexpr std::array<char, 5> tail{' ', '\n', '.', '\'', kPadSymbol};
    return tail[index - 26];
  }

  static constexpr bool is_typeable(char c) noexcept {
    auto i = find(c);
    return i && *i != kPad;
  }

  /// Printable name, used for diagnostics and the visible rendering of enter.
  static std::string display_name(int index) {
    switch (index) {
      case kSpace: return "space";
      case kEnter: return "enter";
      case kPad: return "pad";
      default: return std::string(1, symbol_at(index));
    }
  }
};

}  // namespace ikbd
