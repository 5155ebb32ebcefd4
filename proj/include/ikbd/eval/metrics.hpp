#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "ikbd/error.hpp"

namespace ikbd::eval {

/// Unit-cost edit distance (insertions, deletions, substitutions), two-row
/// dynamic programme.
template <typename Seq>
  requires(!std::is_array_v<Seq>)
std::size_t levenshtein(const Seq& a, const Seq& b) {
  const std::size_t n = std::size(a);
  const std::size_t m = std::size(b);
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  auto ai = std::begin(a);
  for (std::size_t i = 1; i <= n; ++i, ++ai) {
    cur[0] = i;
    auto bj = std::begin(b);
    for (std::size_t j = 1; j <= m; ++j, ++bj) {
      const std::size_t sub = prev[j - 1] + (*ai == *bj ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

inline std::size_t levenshtein(std::string_view a, std::string_view b) {
  return levenshtein<std::string_view>(a, b);
}

/// Words are maximal runs of symbols between space and enter; period and
/// apostrophe stay attached.
inline std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> words;
  std::string cur;
  for (char c : s) {
    if (c == ' ' || c == '\n') {
      if (!cur.empty()) words.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

/// Character error rate in percent.
inline double cer(std::string_view decoded, std::string_view truth) {
  if (truth.empty()) throw ValidationError("cer: empty ground truth");
  return 100.0 * double(levenshtein(decoded, truth)) / double(truth.size());
}

/// Word error rate in percent.
inline double wer(std::string_view decoded, std::string_view truth) {
  const auto p = split_words(truth);
  if (p.empty()) throw ValidationError("wer: ground truth has no words");
  return 100.0 * double(levenshtein(split_words(decoded), p)) / double(p.size());
}

/// Words per minute with five characters per word, counting from the first
/// keystroke to the last.
inline double wpm(std::size_t chars, double minutes) {
  if (!(minutes > 0.0)) throw ValidationError("wpm: elapsed time must be positive");
  if (chars < 1) throw ValidationError("wpm: phrase must have at least one character");
  return double(chars - 1) / minutes / 5.0;
}

inline double wpm(std::string_view phrase, double minutes) { return wpm(phrase.size(), minutes); }

}  // namespace ikbd::eval
