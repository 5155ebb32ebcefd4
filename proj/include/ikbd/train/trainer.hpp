#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "ikbd/core/types.hpp"
#include "ikbd/dnd/checkpoint.hpp"
#include "ikbd/dnd/model.hpp"
#include "ikbd/train/adam.hpp"

namespace ikbd::train {

struct TrainConfig {
  double initial_lr = 0.001;
  double lr_rate = 0.1;  // multiplicative: x(1+rate) on a new minimum, x(1-rate) otherwise
  int patience = 10;
  int batch_size = 32;
  int max_epochs = 100;
  std::uint64_t seed = 1234;
  bool aux = true;
  double clip_norm = 5.0;
  dnd::DndConfig model;

  void validate() const {
    if (!(lr_rate > 0.0 && lr_rate < 1.0)) throw ConfigError("lr_rate must lie in (0, 1)");
    if (patience < 1) throw ConfigError("patience must be >= 1");
    if (batch_size < 1 || max_epochs < 1) throw ConfigError("batch_size and max_epochs must be >= 1");
    if (!(initial_lr > 0.0)) throw ConfigError("initial_lr must be positive");
    model.validate();
  }

  /// Model config with the aux switch applied.
  dnd::DndConfig effective_model() const {
    dnd::DndConfig m = model;
    if (!aux) {
      m.aux_loss_weight = 0.0;
    } else if (m.aux_loss_weight == 0.0) {
      m.aux_loss_weight = 1.0;
    }
    return m;
  }
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"initial_lr", c.initial_lr}, {"lr_rate", c.lr_rate},     {"patience", c.patience},
       {"batch_size", c.batch_size}, {"max_epochs", c.max_epochs}, {"seed", c.seed},
       {"aux", c.aux},               {"clip_norm", c.clip_norm},   {"model", c.effective_model()}};
}

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;  // rate used during this epoch
  bool is_best = false;
};

inline void to_json(nlohmann::json& j, const EpochRecord& r) {
  j = {{"epoch", r.epoch}, {"train_loss", r.train_loss}, {"val_loss", r.val_loss}, {"lr", r.lr},
       {"is_best", r.is_best}};
}

/// Learning-rate and early-stopping bookkeeping driven only by the sequence
/// of validation losses.
class LrSchedule {
 public:
  struct Decision {
    bool is_best = false;
    bool stop = false;
  };

  LrSchedule(double initial_lr, double rate, int patience)
      : lr_(initial_lr), rate_(rate), patience_(patience) {}

  double lr() const { return lr_; }
  double best() const { return best_; }
  int best_epoch() const { return best_epoch_; }
  int epochs() const { return epochs_; }

  Decision update(double val_loss) {
    ++epochs_;
    Decision d;
    if (val_loss < best_) {
      best_ = val_loss;
      best_epoch_ = epochs_;
      since_best_ = 0;
      lr_ *= 1.0 + rate_;
      d.is_best = true;
    } else {
      ++since_best_;
      lr_ *= 1.0 - rate_;
    }
    d.stop = since_best_ >= patience_;
    return d;
  }

 private:
  double lr_;
  double rate_;
  int patience_;
  double best_ = std::numeric_limits<double>::infinity();
  int best_epoch_ = 0;
  int since_best_ = 0;
  int epochs_ = 0;
};

class TrainingDiverged : public Error {
 public:
  using Error::Error;
};

/// Groups samples into batches of similar length: shuffle, sort within
/// pools of 16 batches, then shuffle the batch order.
inline std::vector<std::vector<const TouchSample*>> make_epoch_batches(const std::vector<const TouchSample*>& samples,
                                                                      int batch_size, std::mt19937_64& rng) {
  std::vector<const TouchSample*> order = samples;
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t pool = std::size_t(batch_size) * 16;
  for (std::size_t i = 0; i < order.size(); i += pool) {
    auto end = order.begin() + std::ptrdiff_t(std::min(order.size(), i + pool));
    std::stable_sort(order.begin() + std::ptrdiff_t(i), end,
                     [](const TouchSample* a, const TouchSample* b) { return a->touches.size() < b->touches.size(); });
  }
  std::vector<std::vector<const TouchSample*>> batches;
  for (std::size_t i = 0; i < order.size(); i += std::size_t(batch_size)) {
    batches.emplace_back(order.begin() + std::ptrdiff_t(i),
                         order.begin() + std::ptrdiff_t(std::min(order.size(), i + std::size_t(batch_size))));
  }
  std::shuffle(batches.begin(), batches.end(), rng);
  return batches;
}

inline std::vector<const TouchSample*> pointers(const Dataset& d) {
  std::vector<const TouchSample*> out;
  out.reserve(d.size());
  for (const auto& s : d.samples) out.push_back(&s);
  return out;
}

/// Mean per-step final-output cross-entropy with inference-mode decoding,
/// which is how the model is used once deployed.
template <typename T>
double validation_loss(const dnd::DndModel<T>& model, const Dataset& val, int batch_size) {
  const auto ptrs = pointers(val);
  double total = 0.0;
  std::size_t steps = 0;
  for (std::size_t i = 0; i < ptrs.size(); i += std::size_t(batch_size)) {
    const std::size_t n = std::min(ptrs.size() - i, std::size_t(batch_size));
    const auto batch = dnd::make_batch<T>(std::span<const TouchSample* const>(ptrs.data() + i, n), model.config().window);
    const auto l = model.loss(batch, dnd::Mode::inference);
    total += l.final_loss * double(l.steps);
    steps += l.steps;
  }
  return steps ? total / double(steps) : 0.0;
}

struct FitResult {
  dnd::DndModel<float> best_model;
  int best_epoch = 0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  double initial_train_loss = 0.0;
  std::vector<EpochRecord> log;
};

struct FitHooks {
  std::function<void(const EpochRecord&)> on_epoch;
  /// Called with the model each time a new validation minimum is reached.
  std::function<void(const dnd::DndModel<float>&, const EpochRecord&)> on_best;
};

/// Adam training with the adaptive learning rate and early stopping on the
/// validation loss. Returns the minimum-validation-loss model.
inline FitResult fit(const Dataset& train_ds, const Dataset& val_ds, const TrainConfig& cfg, const FitHooks& hooks = {}) {
  cfg.validate();
  if (train_ds.empty() || val_ds.empty()) throw ValidationError("fit needs non-empty train and validation sets");
  const auto mcfg = cfg.effective_model();
  dnd::DndModel<float> model(mcfg, cfg.seed);
  auto params = model.parameters();
  Adam<float> adam;
  LrSchedule schedule(cfg.initial_lr, cfg.lr_rate, cfg.patience);
  std::mt19937_64 shuffle_rng(cfg.seed ^ 0x5DEECE66DULL);
  const auto train_ptrs = pointers(train_ds);

  FitResult result;
  result.best_model = model;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const double lr = schedule.lr();
    double loss_sum = 0.0;
    std::size_t step_sum = 0;
    for (const auto& group : make_epoch_batches(train_ptrs, cfg.batch_size, shuffle_rng)) {
      const auto batch = dnd::make_batch<float>(group, mcfg.window);
      model.zero_grad();
      const auto l = model.loss_and_grad(batch);
      if (epoch == 1 && step_sum == 0) result.initial_train_loss = l.total;
      clip_grad_norm(params, cfg.clip_norm);
      adam.step(params, lr);
      loss_sum += l.total * double(l.steps);
      step_sum += l.steps;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.train_loss = step_sum ? loss_sum / double(step_sum) : 0.0;
    rec.val_loss = validation_loss(model, val_ds, cfg.batch_size);
    if (!std::isfinite(rec.val_loss)) {
      throw TrainingDiverged("validation loss became non-finite at epoch " + std::to_string(epoch));
    }
    const auto decision = schedule.update(rec.val_loss);
    rec.is_best = decision.is_best;
    result.log.push_back(rec);
    if (decision.is_best) {
      result.best_model = model;
      result.best_epoch = epoch;
      result.best_val_loss = rec.val_loss;
      if (hooks.on_best) hooks.on_best(model, rec);
    }
    if (hooks.on_epoch) hooks.on_epoch(rec);
    if (decision.stop) break;
  }
  return result;
}

}  // namespace ikbd::train
