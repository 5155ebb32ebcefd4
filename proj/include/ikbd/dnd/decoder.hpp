#pragma once

#include <deque>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ikbd/dnd/model.hpp"

namespace ikbd::dnd {

/// Per-row argmax of the logits mapped through the dictionary; ties go to
/// the lowest index. Softmax is monotone, so this equals the argmax of the
/// row probabilities.
template <typename T>
std::string select(const Matrix<T>& logits) {
  if (!logits.allFinite()) throw NumericError("select: non-finite logits");
  std::string out;
  out.reserve(std::size_t(logits.rows()));
  for (int i : DndModel<T>::argmax_rows(logits)) out.push_back(CharacterDictionary::symbol_at(i));
  return out;
}

/// Anything that maps a touch sequence to one symbol per touch.
class Decoder {
 public:
  virtual ~Decoder() = default;
  virtual std::string decode(std::span<const TouchPoint> touches) const = 0;
  virtual std::string name() const = 0;
};

/// Decodes with a frozen neural model. Sequences longer than the window are
/// cut into consecutive window-sized chunks.
template <typename T = float>
class NeuralDecoder : public Decoder {
 public:
  explicit NeuralDecoder(DndModel<T> model) : model_(std::move(model)) {}

  std::string decode(std::span<const TouchPoint> touches) const override {
    std::string out;
    const std::size_t w = std::size_t(model_.config().window);
    for (std::size_t i = 0; i < touches.size(); i += w) {
      out += select(model_.logits(touches.subspan(i, std::min(w, touches.size() - i))));
    }
    return out;
  }

  std::string name() const override { return to_string(model_.config().variant) + " " + model_.config().tag(); }

  const DndModel<T>& model() const { return model_; }

 private:
  DndModel<T> model_;
};

/// The user input buffer of a live session: the most recent touches (at
/// most `window`) and the decode of exactly those touches.
struct DecodeState {
  std::size_t window = 64;
  std::deque<TouchPoint> buffer;
  std::string decoded;

  explicit DecodeState(std::size_t w = 64) : window(w) {}

  void reset() {
    buffer.clear();
    decoded.clear();
  }
};

/// Appends one touch (evicting the oldest when the buffer is full) and
/// re-decodes the whole buffer. Earlier symbols may change.
template <typename T>
const std::string& decode_stream(const DndModel<T>& model, DecodeState& state, const TouchPoint& p) {
  if (state.window < 1) throw ConfigError("decode window must be positive");
  if (state.window > std::size_t(model.config().window)) throw ConfigError("decode window exceeds model window");
  state.buffer.push_back(p);
  while (state.buffer.size() > state.window) state.buffer.pop_front();
  const std::vector<TouchPoint> points(state.buffer.begin(), state.buffer.end());
  state.decoded = select(model.logits(points));
  return state.decoded;
}

}  // namespace ikbd::dnd
