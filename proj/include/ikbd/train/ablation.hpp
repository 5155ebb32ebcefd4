#pragma once

#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "ikbd/core/split.hpp"
#include "ikbd/dnd/gaussian.hpp"
#include "ikbd/eval/evaluate.hpp"
#include "ikbd/train/trainer.hpp"

namespace ikbd::train {

/// One row of the ablation matrix, written "variant:tag", e.g.
/// "dnd:s2u64au", "bi-rnn:s3u32" or "gaussian-baseline".
struct AblationCell {
  dnd::DndConfig model;

  std::string model_name() const { return dnd::to_string(model.variant); }
  std::string parameter() const {
    return model.variant == dnd::Variant::gaussian_baseline ? std::string("-") : model.tag();
  }
  std::string label() const { return model_name() + ":" + parameter(); }
};

inline AblationCell parse_cell(const std::string& text, const dnd::DndConfig& base = {}) {
  AblationCell c;
  c.model = base;
  const auto colon = text.find(':');
  c.model.variant = dnd::parse_variant(text.substr(0, colon));
  if (c.model.variant == dnd::Variant::gaussian_baseline) return c;
  if (colon == std::string::npos) throw ConfigError("ablation cell '" + text + "' needs a parameter tag");
  dnd::apply_tag(c.model, text.substr(colon + 1));
  if (c.model.variant != dnd::Variant::dnd) c.model.aux_loss_weight = 0.0;
  c.model.validate();
  return c;
}

inline std::vector<AblationCell> parse_matrix(const std::string& list, const dnd::DndConfig& base = {}) {
  std::vector<AblationCell> cells;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) cells.push_back(parse_cell(item, base));
  }
  return cells;
}

struct AblationRow {
  std::string model;
  std::string parameter;
  eval::EvalReport report;
  std::size_t parameters = 0;
  int best_epoch = 0;
  double best_val_loss = 0.0;
};

struct AblationHooks {
  std::function<void(const AblationCell&)> on_cell_start;
  std::function<void(const AblationCell&, const EpochRecord&)> on_epoch;
  std::function<void(const AblationCell&, const FitResult&)> on_fit;
};

/// Trains and evaluates every cell on the same split with the same seed.
inline std::vector<AblationRow> run_ablation(const std::vector<AblationCell>& cells, const DatasetSplit& data,
                                             const TrainConfig& base, const AblationHooks& hooks = {}) {
  std::vector<AblationRow> rows;
  for (const auto& cell : cells) {
    if (hooks.on_cell_start) hooks.on_cell_start(cell);
    AblationRow row{cell.model_name(), cell.parameter(), {}, 0, 0, 0.0};
    if (cell.model.variant == dnd::Variant::gaussian_baseline) {
      row.report = eval::evaluate(dnd::GaussianBaseline::fit(data.train), data.test);
      row.parameters = 4 * CharacterDictionary::kTypeable;
    } else {
      TrainConfig cfg = base;
      cfg.model = cell.model;
      cfg.aux = cell.model.aux();
      FitHooks fh;
      if (hooks.on_epoch) fh.on_epoch = [&](const EpochRecord& r) { hooks.on_epoch(cell, r); };
      FitResult fr = fit(data.train, data.val, cfg, fh);
      if (hooks.on_fit) hooks.on_fit(cell, fr);
      row.report = eval::evaluate(dnd::NeuralDecoder<float>(fr.best_model), data.test);
      row.parameters = fr.best_model.parameter_count();
      row.best_epoch = fr.best_epoch;
      row.best_val_loss = fr.best_val_loss;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Comma-separated table: model, parameter, CER, WER, time per word (ms),
/// then parameter count and best epoch.
inline void write_ablation_csv(std::ostream& os, const std::vector<AblationRow>& rows) {
  os << "model,parameter,cer,wer,time_ms,params,best_epoch\n";
  for (const auto& r : rows) {
    os << r.model << ',' << r.parameter << ',' << r.report.cer << ',' << r.report.wer << ','
       << r.report.ms_per_word << ',' << r.parameters << ',' << r.best_epoch << '\n';
  }
}

}  // namespace ikbd::train
