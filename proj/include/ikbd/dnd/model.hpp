#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ikbd/compute/gru.hpp"
#include "ikbd/core/types.hpp"
#include "ikbd/dnd/config.hpp"

namespace ikbd::dnd {

using compute::Matrix;
using compute::Parameter;
using compute::SequenceLayout;

/// A padded, time-major batch of touch windows with per-step targets.
template <typename T>
struct Batch {
  Matrix<T> inputs;  // rows x 2, (x, y) per step; padding rows are zero
  SequenceLayout layout;
  std::vector<int> targets;  // one per row; padding rows hold the pad index
};

template <typename T>
Matrix<T> touch_inputs(std::span<const TouchPoint> touches) {
  Matrix<T> x(Eigen::Index(touches.size()), 2);
  for (std::size_t i = 0; i < touches.size(); ++i) {
    x(Eigen::Index(i), 0) = static_cast<T>(touches[i].x);
    x(Eigen::Index(i), 1) = static_cast<T>(touches[i].y);
  }
  return x;
}

/// Packs samples into one batch, truncating each to `window` steps.
template <typename T>
Batch<T> make_batch(std::span<const TouchSample* const> samples, int window) {
  Batch<T> b;
  b.layout.batch = int(samples.size());
  b.layout.steps = 0;
  for (const auto* s : samples) {
    const int n = std::min<int>(int(s->touches.size()), window);
    b.layout.lengths.push_back(n);
    b.layout.steps = std::max(b.layout.steps, n);
  }
  b.layout.check();
  b.inputs = Matrix<T>::Zero(b.layout.rows(), 2);
  b.targets.assign(std::size_t(b.layout.rows()), CharacterDictionary::kPad);
  for (int j = 0; j < b.layout.batch; ++j) {
    const auto& s = *samples[std::size_t(j)];
    for (int t = 0; t < b.layout.lengths[std::size_t(j)]; ++t) {
      const auto r = b.layout.row(t, j);
      b.inputs(r, 0) = static_cast<T>(s.touches[std::size_t(t)].x);
      b.inputs(r, 1) = static_cast<T>(s.touches[std::size_t(t)].y);
      b.targets[std::size_t(r)] = CharacterDictionary::index_of(s.phrase[std::size_t(t)]);
    }
  }
  return b;
}

/// A stack of recurrent layers, either bi-directional or forward-only.
template <typename T>
struct RecurrentStack {
  bool bidirectional = true;
  std::vector<compute::BiGru<T>> bi;
  std::vector<compute::GruParams<T>> uni;

  struct Cache {
    std::vector<typename compute::BiGru<T>::Cache> bi;
    std::vector<compute::GruCache<T>> uni;
    const Matrix<T>& output() const { return bi.empty() ? uni.back().h : bi.back().out; }
  };

  RecurrentStack() = default;
  RecurrentStack(const std::string& name, int layers, std::size_t in, std::size_t units, bool bidir)
      : bidirectional(bidir) {
    for (int l = 0; l < layers; ++l) {
      const std::string n = name + "." + std::to_string(l);
      if (bidir) {
        bi.emplace_back(n, l == 0 ? in : 2 * units, units);
      } else {
        uni.emplace_back(n, l == 0 ? in : units, units);
      }
    }
  }

  Eigen::Index out_dim() const { return bidirectional ? bi.back().out_dim() : uni.back().units(); }

  void init(std::mt19937_64& rng) {
    for (auto& l : bi) l.init(rng);
    for (auto& l : uni) l.init(rng);
  }

  Cache forward(const Matrix<T>& x, const SequenceLayout& layout) const {
    Cache c;
    const Matrix<T>* in = &x;
    if (bidirectional) {
      c.bi.reserve(bi.size());
      for (const auto& l : bi) {
        c.bi.push_back(l.forward(*in, layout));
        in = &c.bi.back().out;
      }
    } else {
      c.uni.reserve(uni.size());
      for (const auto& l : uni) {
        c.uni.push_back(compute::gru_forward(l, *in, layout));
        in = &c.uni.back().h;
      }
    }
    return c;
  }

  Matrix<T> backward(const Cache& c, Matrix<T> dy, const SequenceLayout& layout) {
    if (bidirectional) {
      for (std::size_t l = bi.size(); l-- > 0;) dy = bi[l].backward(c.bi[l], dy, layout);
    } else {
      for (std::size_t l = uni.size(); l-- > 0;) dy = compute::gru_backward(uni[l], c.uni[l], dy, layout);
    }
    return dy;
  }

  template <typename F>
  void for_each_parameter(F&& f) {
    for (auto& l : bi) l.for_each_parameter(f);
    for (auto& l : uni) l.for_each_parameter(f);
  }
  template <typename F>
  void for_each_parameter(F&& f) const {
    for (const auto& l : bi) l.for_each_parameter(f);
    for (const auto& l : uni) l.for_each_parameter(f);
  }
};

enum class Mode { train, inference };

/// Losses of one batch. `total` is what the optimizer minimizes.
struct LossBreakdown {
  double total = 0.0;
  double final_loss = 0.0;
  double intermediate_loss = 0.0;
  std::size_t steps = 0;
};

/// The deep neural decoder and its recurrent ablations.
///
/// dnd: input projection -> bi-GRU decoding stack -> intermediate logits ->
/// character embedding -> bi-GRU language-model stack -> final logits.
/// bi-rnn / uni-rnn: input projection -> GRU stack -> logits.
template <typename T>
class DndModel {
 public:
  struct Cache {
    Matrix<T> inputs;
    typename RecurrentStack<T>::Cache dec;
    Matrix<T> intermediate;
    Matrix<T> probs;       // softmax(intermediate), soft mode only
    std::vector<int> picked;  // argmax(intermediate), hard mode only
    Matrix<T> clm_in;
    typename RecurrentStack<T>::Cache clm;
    Matrix<T> final_logits;
    Mode mode = Mode::inference;
  };

  DndModel() = default;

  explicit DndModel(const DndConfig& cfg, std::uint64_t seed = 0) : cfg_(cfg) {
    cfg_.validate();
    if (cfg_.variant == Variant::gaussian_baseline) throw ConfigError("gaussian baseline has no neural model");
    const auto u = std::size_t(cfg_.units);
    const auto k = std::size_t(cfg_.dict_size);
    input_ = compute::Linear<T>("input", 2, u);
    dec_ = RecurrentStack<T>("decoder", cfg_.dec_stacks, u, u, cfg_.bidirectional());
    dec_out_ = compute::Linear<T>(cfg_.uses_clm() ? "intermediate" : "output", std::size_t(dec_.out_dim()), k);
    if (cfg_.uses_clm()) {
      embedding_ = Parameter<T>("embedding", {k, std::size_t(cfg_.embed_dim)});
      clm_ = RecurrentStack<T>("clm", cfg_.clm_stacks, std::size_t(cfg_.embed_dim), u, true);
      final_out_ = compute::Linear<T>("final", std::size_t(clm_.out_dim()), k);
    }
    std::mt19937_64 rng(seed);
    input_.init(rng);
    dec_.init(rng);
    dec_out_.init(rng);
    if (cfg_.uses_clm()) {
      compute::init_uniform(embedding_, k, rng);
      clm_.init(rng);
      final_out_.init(rng);
    }
  }

  const DndConfig& config() const { return cfg_; }

  Cache forward(const Matrix<T>& inputs, const SequenceLayout& layout, Mode mode) const {
    layout.check();
    if (inputs.rows() != layout.rows() || inputs.cols() != 2) throw ShapeError("model input must be rows x 2");
    Cache c;
    c.mode = mode;
    c.inputs = inputs;
    c.dec = dec_.forward(input_.forward(inputs), layout);
    c.intermediate = dec_out_.forward(c.dec.output());
    if (!cfg_.uses_clm()) {
      c.final_logits = c.intermediate;
      return c;
    }
    if (mode == Mode::train && cfg_.clm_input == ClmInput::soft) {
      c.probs = compute::softmax(c.intermediate);
      c.clm_in = compute::matmul(c.probs, embedding_.w());
    } else {
      c.picked = argmax_rows(c.intermediate);
      c.clm_in = compute::embedding_lookup<T>(embedding_.w(), c.picked);
    }
    c.clm = clm_.forward(c.clm_in, layout);
    c.final_logits = final_out_.forward(c.clm.output());
    return c;
  }

  /// Inference-mode logits for one unpadded window of touches.
  Matrix<T> logits(std::span<const TouchPoint> touches) const {
    if (touches.empty()) throw ValidationError("cannot decode an empty window");
    if (int(touches.size()) > cfg_.window) throw ValidationError("window longer than the model window");
    return forward(touch_inputs<T>(touches), SequenceLayout::single(int(touches.size())), Mode::inference)
        .final_logits;
  }

  /// Loss without gradients.
  LossBreakdown loss(const Batch<T>& b, Mode mode = Mode::train) const {
    return losses(forward(b.inputs, b.layout, mode), b.targets).first;
  }

  /// Train-mode loss plus accumulation of every parameter gradient.
  LossBreakdown loss_and_grad(const Batch<T>& b) {
    const Cache c = forward(b.inputs, b.layout, Mode::train);
    auto [loss, ce] = losses(c, b.targets);
    backward(c, ce, b.targets, b.layout);
    return loss;
  }

  void zero_grad() {
    for_each_parameter([](Parameter<T>& p) { p.zero_grad(); });
  }

  template <typename F>
  void for_each_parameter(F&& f) {
    input_.for_each_parameter(f);
    dec_.for_each_parameter(f);
    dec_out_.for_each_parameter(f);
    if (cfg_.uses_clm()) {
      f(embedding_);
      clm_.for_each_parameter(f);
      final_out_.for_each_parameter(f);
    }
  }
  template <typename F>
  void for_each_parameter(F&& f) const {
    input_.for_each_parameter(f);
    dec_.for_each_parameter(f);
    dec_out_.for_each_parameter(f);
    if (cfg_.uses_clm()) {
      f(embedding_);
      clm_.for_each_parameter(f);
      final_out_.for_each_parameter(f);
    }
  }

  std::vector<Parameter<T>*> parameters() {
    std::vector<Parameter<T>*> out;
    for_each_parameter([&](Parameter<T>& p) { out.push_back(&p); });
    return out;
  }
  std::vector<const Parameter<T>*> parameters() const {
    std::vector<const Parameter<T>*> out;
    for_each_parameter([&](const Parameter<T>& p) { out.push_back(&p); });
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for_each_parameter([&](const Parameter<T>& p) { n += p.value.size(); });
    return n;
  }

  /// Same architecture and values in another scalar type.
  template <typename U>
  DndModel<U> cast() const {
    DndModel<U> out(cfg_, 0);
    auto src = parameters();
    auto dst = out.parameters();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i]->value = src[i]->value.template cast<U>();
    return out;
  }

  static std::vector<int> argmax_rows(const Matrix<T>& logits) {
    std::vector<int> out(std::size_t(logits.rows()));
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      Eigen::Index best = 0;
      // first maximum wins ties
      for (Eigen::Index j = 1; j < logits.cols(); ++j) {
        if (logits(i, j) > logits(i, best)) best = j;
      }
      out[std::size_t(i)] = int(best);
    }
    return out;
  }

 private:
  struct CrossEntropies {
    compute::CrossEntropy<T> final_ce;
    compute::CrossEntropy<T> inter_ce;
  };

  std::pair<LossBreakdown, CrossEntropies> losses(const Cache& c, const std::vector<int>& targets) const {
    CrossEntropies ce;
    LossBreakdown l;
    ce.final_ce = compute::softmax_cross_entropy<T>(c.final_logits, targets, CharacterDictionary::kPad);
    l.final_loss = double(ce.final_ce.loss);
    l.steps = ce.final_ce.count;
    l.total = l.final_loss;
    if (cfg_.aux()) {
      ce.inter_ce = compute::softmax_cross_entropy<T>(c.intermediate, targets, CharacterDictionary::kPad);
      l.intermediate_loss = double(ce.inter_ce.loss);
      l.total = double(ce.final_ce.loss + T(cfg_.aux_loss_weight) * ce.inter_ce.loss);
    }
    return {l, std::move(ce)};
  }

  void backward(const Cache& c, const CrossEntropies& ce, const std::vector<int>& targets,
                const SequenceLayout& layout) {
    const int pad = CharacterDictionary::kPad;
    Matrix<T> d_final = compute::softmax_cross_entropy_backward<T>(ce.final_ce, targets, pad);
    Matrix<T> d_inter;
    if (!cfg_.uses_clm()) {
      d_inter = std::move(d_final);
    } else {
      Matrix<T> d_clm_out = final_out_.backward(c.clm.output(), d_final);
      Matrix<T> d_clm_in = clm_.backward(c.clm, std::move(d_clm_out), layout);
      if (c.mode == Mode::train && cfg_.clm_input == ClmInput::soft) {
        Matrix<T> d_probs = Matrix<T>::Zero(c.probs.rows(), c.probs.cols());
        compute::matmul_backward(c.probs, embedding_.w(), d_clm_in, &d_probs, &embedding_.g());
        d_inter = compute::softmax_backward(c.probs, d_probs);
      } else {
        compute::embedding_backward<T>(c.picked, d_clm_in, embedding_.g());
        d_inter = Matrix<T>::Zero(c.intermediate.rows(), c.intermediate.cols());
      }
      if (cfg_.aux()) {
        d_inter += compute::softmax_cross_entropy_backward<T>(ce.inter_ce, targets, pad, T(cfg_.aux_loss_weight));
      }
    }
    Matrix<T> d_dec = dec_out_.backward(c.dec.output(), d_inter);
    Matrix<T> d_proj = dec_.backward(c.dec, std::move(d_dec), layout);
    input_.backward(c.inputs, d_proj);
  }

  DndConfig cfg_;
  compute::Linear<T> input_;
  RecurrentStack<T> dec_;
  compute::Linear<T> dec_out_;
  Parameter<T> embedding_;
  RecurrentStack<T> clm_;
  compute::Linear<T> final_out_;
};

}  // namespace ikbd::dnd
