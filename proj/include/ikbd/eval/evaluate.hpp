#pragma once

#include <chrono>
#include <string>

#include <json.hpp>

#include "ikbd/core/types.hpp"
#include "ikbd/dnd/decoder.hpp"
#include "ikbd/eval/metrics.hpp"

namespace ikbd::eval {

struct EvalReport {
  double cer = 0.0;  // percent, micro-averaged
  double wer = 0.0;  // percent, micro-averaged
  double ms_per_word = 0.0;
  std::size_t n_phrases = 0;
  std::size_t n_chars = 0;
  std::size_t n_words = 0;
  std::size_t char_errors = 0;
  std::size_t word_errors = 0;
};

inline void to_json(nlohmann::json& j, const EvalReport& r) {
  j = {{"cer", r.cer},           {"wer", r.wer},         {"ms_per_word", r.ms_per_word},
       {"n_phrases", r.n_phrases}, {"n_chars", r.n_chars}, {"n_words", r.n_words},
       {"char_errors", r.char_errors}, {"word_errors", r.word_errors}};
}

/// Accumulates edit distances over many phrases; rates are total distance
/// over total reference length.
struct ErrorTally {
  std::size_t char_errors = 0, chars = 0, word_errors = 0, words = 0, phrases = 0;

  void add(std::string_view decoded, std::string_view truth) {
    char_errors += levenshtein(decoded, truth);
    chars += truth.size();
    const auto p = split_words(truth);
    word_errors += levenshtein(split_words(decoded), p);
    words += p.size();
    ++phrases;
  }

  double cer() const { return chars ? 100.0 * double(char_errors) / double(chars) : 0.0; }
  double wer() const { return words ? 100.0 * double(word_errors) / double(words) : 0.0; }
};

/// Decodes every phrase of `test` one at a time (no batching) and reports
/// micro-averaged CER/WER and the mean decode time per reference word.
inline EvalReport evaluate(const dnd::Decoder& decoder, const Dataset& test) {
  if (test.empty()) throw ValidationError("evaluate: empty test set");
  ErrorTally tally;
  std::chrono::steady_clock::duration spent{};
  for (const auto& s : test.samples) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::string decoded = decoder.decode(s.touches);
    spent += std::chrono::steady_clock::now() - t0;
    tally.add(decoded, s.phrase);
  }
  EvalReport r;
  r.cer = tally.cer();
  r.wer = tally.wer();
  r.n_phrases = tally.phrases;
  r.n_chars = tally.chars;
  r.n_words = tally.words;
  r.char_errors = tally.char_errors;
  r.word_errors = tally.word_errors;
  r.ms_per_word = r.n_words ? std::chrono::duration<double, std::milli>(spent).count() / double(r.n_words) : 0.0;
  return r;
}

}  // namespace ikbd::eval
