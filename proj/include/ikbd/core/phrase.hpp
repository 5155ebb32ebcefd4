#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "ikbd/core/dictionary.hpp"
#include "ikbd/error.hpp"

namespace ikbd {

namespace detail {

inline std::string clean_phrase(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (char ch : raw) {
    char c = ch;
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if (c == '\n') {
      // enter absorbs surrounding blanks
      while (!out.empty() && out.back() == ' ') out.pop_back();
      pending_space = false;
      out.push_back('\n');
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v') {
      pending_space = true;
      continue;
    }
    if (!CharacterDictionary::is_typeable(c)) continue;
    if (pending_space && !out.empty() && out.back() != '\n') out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

}  // namespace detail

/// Reduce arbitrary text to the typeable alphabet: lowercase letters, space,
/// period, apostrophe and enter ('\n'). Everything else is dropped and runs of
/// blanks collapse to one space. When `second` is given the two cleaned
/// sentences are joined with enter.
inline std::string preprocess_phrase(std::string_view raw,
                                     std::optional<std::string_view> second = std::nullopt) {
  std::string out = detail::clean_phrase(raw);
  if (second) {
    std::string tail = detail::clean_phrase(*second);
    if (out.empty() || tail.empty()) throw RejectedPhrase("phrase is empty after cleaning");
    out += '\n';
    out += tail;
  }
  if (out.empty()) throw RejectedPhrase("phrase is empty after cleaning");
  return out;
}

}  // namespace ikbd
