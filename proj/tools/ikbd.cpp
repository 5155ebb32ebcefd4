// Command-line entry point: simulate, train, eval, ablate, decode,
// gradcheck and serve.

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ikbd.hpp"
#include "ikbd/serve/server.hpp"

using namespace ikbd;
using nlohmann::json;

namespace {

struct Options {
  std::string corpus = sim::default_corpus_path();
  std::string dataset;
  std::string checkpoint;
  std::string out;
  std::string log = "ikbd-runs.jsonl";
  std::uint64_t seed = 1234;
  bool as_json = false;

  // simulator
  std::size_t users = 12;
  std::size_t phrases = 150;
  double tap_sigma = 2.5;
  double drift_step = 0.8;

  // split and augmentation
  std::size_t test_users = 2;
  std::size_t val_users = 1;
  std::size_t augment = 5;
  std::string split = "test";

  // model and training
  std::string variant = "dnd";
  int stacks = 2;
  int clm_stacks = 2;
  int units = 64;
  bool aux = true;
  int window = 64;
  std::string clm_input = "soft";
  int epochs = 100;
  int batch = 32;
  double lr = 0.001;
  int patience = 10;
  std::string cells = "dnd:s2u64au,dnd:s2u64,dnd:s3u64au,dnd:s3u64";

  // gradcheck
  int steps = 5;
  std::size_t sample = 0;

  // serve
  std::string address = "127.0.0.1";
  unsigned short port = 8765;
};

dnd::DndConfig model_config(const Options& o) {
  dnd::DndConfig c;
  c.variant = dnd::parse_variant(o.variant);
  c.dec_stacks = o.stacks;
  c.clm_stacks = o.clm_stacks;
  c.units = o.units;
  c.window = o.window;
  c.clm_input = dnd::parse_clm_input(o.clm_input);
  c.aux_loss_weight = (o.aux && c.variant == dnd::Variant::dnd) ? 1.0 : 0.0;
  c.validate();
  return c;
}

train::TrainConfig train_config(const Options& o) {
  train::TrainConfig t;
  t.model = model_config(o);
  t.aux = t.model.aux();
  t.max_epochs = o.epochs;
  t.batch_size = o.batch;
  t.initial_lr = o.lr;
  t.patience = o.patience;
  t.seed = o.seed;
  t.validate();
  return t;
}

sim::BenchmarkConfig benchmark_config(const Options& o) {
  sim::BenchmarkConfig b;
  b.sim.n_users = o.users;
  b.sim.phrases_per_user = o.phrases;
  b.sim.tap_sigma_mm = o.tap_sigma;
  b.sim.drift_step_mm = o.drift_step;
  b.sim.seed = o.seed;
  b.n_test_users = o.test_users;
  b.n_val_users = o.val_users;
  b.augment_copies = o.augment;
  return b;
}

// The dataset file when given, otherwise the synthetic benchmark built from
// the corpus. Train is augmented either way.
DatasetSplit load_split(const Options& o) {
  const auto bc = benchmark_config(o);
  if (o.dataset.empty()) return sim::make_benchmark(sim::load_corpus(o.corpus), bc).split;
  auto split = split_dataset(load_dataset(o.dataset), o.test_users, o.val_users, o.seed);
  auto rng = sim::detail::stream(o.seed, 0xA06u);
  split.train = sim::augment_offsets(split.train, o.augment, bc.augment_max_px_x, bc.augment_max_px_y, rng);
  return split;
}

const Dataset& pick_split(const DatasetSplit& s, const std::string& which) {
  if (which == "test") return s.test;
  if (which == "val") return s.val;
  if (which == "train") return s.train;
  throw ConfigError("unknown split '" + which + "'");
}

dnd::LoadedCheckpoint<float> open_checkpoint(const Options& o, const CLI::App& sub) {
  if (o.checkpoint.empty()) throw ConfigError("--checkpoint is required");
  // model flags given on the command line are checked against the file
  const bool shape_flags = sub.count("--stacks") || sub.count("--units") || sub.count("--variant") ||
                           sub.count("--clm-stacks");
  if (!shape_flags) return dnd::load_checkpoint<float>(o.checkpoint);
  const auto expected = model_config(o);
  return dnd::load_checkpoint<float>(o.checkpoint, &expected);
}

void emit(const Options& o, const json& result, const std::string& text) {
  if (o.as_json) {
    std::cout << result.dump() << "\n";
  } else if (!text.empty()) {
    std::cout << text;
  }
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void append_log(const std::string& path, const json& record) {
  if (path.empty()) return;
  std::ofstream os(path, std::ios::app);
  if (os) os << record.dump() << "\n";
}

json run_simulate(const Options& o) {
  if (o.out.empty()) throw ConfigError("--out is required");
  auto cfg = benchmark_config(o).sim;
  const auto d = sim::simulate_dataset(cfg, sim::load_corpus(o.corpus));
  save_dataset(o.out, d);
  json r = {{"users", d.users().size()}, {"phrases", d.size()}, {"keystrokes", d.keystrokes()}, {"out", o.out}};
  std::ostringstream ss;
  ss << "simulated " << d.users().size() << " users, " << d.size() << " phrases, " << d.keystrokes()
     << " keystrokes -> " << o.out << "\n";
  emit(o, r, ss.str());
  return r;
}

json run_train(const Options& o) {
  if (o.out.empty()) throw ConfigError("--out is required");
  const auto tc = train_config(o);
  if (tc.model.variant == dnd::Variant::gaussian_baseline) throw ConfigError("the gaussian baseline is not trained");
  const auto split = load_split(o);
  train::FitHooks hooks;
  hooks.on_epoch = [&](const train::EpochRecord& r) {
    if (!o.as_json) std::cout << json(r).dump() << "\n" << std::flush;
  };
  hooks.on_best = [&](const dnd::DndModel<float>& m, const train::EpochRecord& r) {
    dnd::save_checkpoint(o.out, m, {m.config(), o.seed, r.epoch, {{"val_loss", r.val_loss}}});
  };
  const auto fr = train::fit(split.train, split.val, tc, hooks);
  json r = {{"best_epoch", fr.best_epoch},
            {"best_val_loss", fr.best_val_loss},
            {"epochs", fr.log.size()},
            {"parameters", fr.best_model.parameter_count()},
            {"checkpoint", o.out},
            {"log", fr.log}};
  std::ostringstream ss;
  ss << "best epoch " << fr.best_epoch << " val loss " << fr.best_val_loss << " -> " << o.out << "\n";
  emit(o, r, ss.str());
  return r;
}

json run_eval(const Options& o, const CLI::App& sub) {
  const auto split = load_split(o);
  const Dataset& data = pick_split(split, o.split);
  eval::EvalReport rep;
  std::string name;
  if (dnd::parse_variant(o.variant) == dnd::Variant::gaussian_baseline && o.checkpoint.empty()) {
    const auto g = dnd::GaussianBaseline::fit(split.train);
    rep = eval::evaluate(g, data);
    name = g.name();
  } else {
    auto ck = open_checkpoint(o, sub);
    const dnd::NeuralDecoder<float> dec(std::move(ck.model));
    rep = eval::evaluate(dec, data);
    name = dec.name();
  }
  json r = rep;
  r["decoder"] = name;
  r["split"] = o.split;
  std::ostringstream ss;
  ss << name << " on " << o.split << ": CER " << rep.cer << " WER " << rep.wer << " (" << rep.ms_per_word
     << " ms/word, " << rep.n_phrases << " phrases)\n";
  emit(o, r, ss.str());
  return r;
}

json run_ablate(const Options& o) {
  const auto cells = train::parse_matrix(o.cells);
  auto base = train_config(o);
  std::vector<train::AblationRow> rows;
  if (!cells.empty()) {
    const auto split = load_split(o);
    train::AblationHooks hooks;
    hooks.on_cell_start = [&](const train::AblationCell& c) {
      if (!o.as_json) std::cerr << "cell " << c.label() << "\n";
    };
    rows = train::run_ablation(cells, split, base, hooks);
  }
  std::ostringstream csv;
  train::write_ablation_csv(csv, rows);
  if (!o.out.empty()) {
    std::ofstream os(o.out);
    if (!os) throw Error("cannot open " + o.out + " for writing");
    os << csv.str();
  }
  json table = json::array();
  for (const auto& row : rows) {
    table.push_back({{"model", row.model},
                     {"parameter", row.parameter},
                     {"cer", row.report.cer},
                     {"wer", row.report.wer},
                     {"time_ms", row.report.ms_per_word},
                     {"params", row.parameters},
                     {"best_epoch", row.best_epoch}});
  }
  json r = {{"rows", table}};
  emit(o, r, csv.str());
  return r;
}

std::vector<std::vector<TouchPoint>> read_touch_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  const std::string text = buf.str();
  // a bare JSON array of [x, y] pairs, or a dataset file
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("bad touch file: ") + e.what());
    }
    std::vector<TouchPoint> pts;
    for (const auto& p : j) {
      if (!p.is_array() || p.size() < 2) throw ParseError("touch file entries must be [x, y]");
      pts.push_back({p[0].get<double>(), p[1].get<double>(), std::nullopt});
    }
    if (pts.empty()) throw ValidationError("touch file has no touches");
    return {pts};
  }
  std::stringstream ss(text);
  const auto d = read_dataset(ss);
  std::vector<std::vector<TouchPoint>> out;
  for (const auto& s : d.samples) out.push_back(s.touches);
  return out;
}

json run_decode(const Options& o, const CLI::App& sub, const std::string& input) {
  auto ck = open_checkpoint(o, sub);
  const dnd::NeuralDecoder<float> dec(std::move(ck.model));
  json texts = json::array();
  std::string out;
  for (const auto& seq : read_touch_file(input)) {
    const auto t = dec.decode(seq);
    texts.push_back(t);
    out += t + "\n";
  }
  json r = {{"decoded", texts}};
  emit(o, r, out);
  return r;
}

json run_gradcheck(const Options& o) {
  auto cfg = model_config(o);
  if (cfg.variant == dnd::Variant::gaussian_baseline) throw ConfigError("the gaussian baseline has no gradients");
  if (o.steps < 1) throw ConfigError("--steps must be >= 1");
  cfg.window = std::max(cfg.window, o.steps);
  dnd::DndModel<double> model(cfg, o.seed);
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> sym(0, CharacterDictionary::kTypeable - 1);
  TouchSample s;
  for (int i = 0; i < o.steps; ++i) {
    s.touches.push_back({u(rng), u(rng), std::nullopt});
    s.phrase.push_back(CharacterDictionary::symbol_at(sym(rng)));
  }
  const TouchSample* ptr = &s;
  const auto batch = dnd::make_batch<double>(std::span<const TouchSample* const>(&ptr, 1), cfg.window);
  const auto t0 = std::chrono::steady_clock::now();
  const auto rep = compute::grad_check<double>(
      [&] { return model.loss(batch).total; },
      [&] {
        model.zero_grad();
        model.loss_and_grad(batch);
      },
      model.parameters(), {1e-5, o.sample, o.seed});
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = rep.max_rel_error < 1e-4;
  json r = {{"max_rel_error", rep.max_rel_error}, {"worst_parameter", rep.worst_parameter},
            {"worst_index", rep.worst_index},     {"entries_checked", rep.entries_checked},
            {"seconds", secs},                    {"pass", ok}};
  std::ostringstream ss;
  ss << "max rel error " << rep.max_rel_error << " (" << rep.worst_parameter << "[" << rep.worst_index << "]), "
     << rep.entries_checked << " entries in " << secs << " s\n";
  emit(o, r, ss.str());
  if (!ok) throw NumericError("gradient check failed: max rel error " + std::to_string(rep.max_rel_error) + " >= 1e-4");
  return r;
}

json run_serve(const Options& o, const CLI::App& sub) {
  auto ck = open_checkpoint(o, sub);
  auto model = std::make_shared<const dnd::DndModel<float>>(std::move(ck.model));
  serve::DecodeServer server(model, o.address, o.port, [](const std::string& m) { std::cerr << m << "\n"; });
  std::cerr << "serving " << model->config().tag() << " on ws://" << o.address << ":" << server.port() << "\n";
  server.run();
  return {{"port", server.port()}};
}

void add_model_flags(CLI::App* sub, Options& o) {
  sub->add_option("--variant", o.variant, "dnd, bi-rnn, uni-rnn or gaussian-baseline")->capture_default_str();
  sub->add_option("--stacks", o.stacks, "decoding stack depth")->capture_default_str();
  sub->add_option("--clm-stacks", o.clm_stacks, "language-model stack depth")->capture_default_str();
  sub->add_option("--units", o.units, "GRU units per direction")->capture_default_str();
  sub->add_flag("--aux,!--no-aux", o.aux, "auxiliary intermediate loss")->capture_default_str();
  sub->add_option("--window", o.window, "keystrokes per decode window")->capture_default_str();
  sub->add_option("--clm-input", o.clm_input, "soft or hard CLM input during training")->capture_default_str();
}

void add_data_flags(CLI::App* sub, Options& o) {
  sub->add_option("--corpus", o.corpus, "sentence file for the synthetic benchmark")->capture_default_str();
  sub->add_option("--dataset", o.dataset, "dataset file; replaces the synthetic benchmark");
  sub->add_option("--users", o.users, "simulated users")->capture_default_str();
  sub->add_option("--phrases", o.phrases, "phrases per simulated user")->capture_default_str();
  sub->add_option("--tap-sigma", o.tap_sigma, "tap noise in mm")->capture_default_str();
  sub->add_option("--drift-step", o.drift_step, "drift per phrase in mm")->capture_default_str();
}

void add_split_flags(CLI::App* sub, Options& o) {
  sub->add_option("--test-users", o.test_users)->capture_default_str();
  sub->add_option("--val-users", o.val_users)->capture_default_str();
  sub->add_option("--augment", o.augment, "offset-augmented copies of train")->capture_default_str();
}

void add_train_flags(CLI::App* sub, Options& o) {
  sub->add_option("--epochs", o.epochs)->capture_default_str();
  sub->add_option("--batch", o.batch)->capture_default_str();
  sub->add_option("--lr", o.lr, "initial learning rate")->capture_default_str();
  sub->add_option("--patience", o.patience)->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"ikbd: touch-typing decoder toolkit"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.set_config("--config", "", "TOML file with option values; command-line flags take precedence");
  app.add_option("--seed", o.seed, "seed for simulation, splitting and training")->capture_default_str();
  app.add_option("--log", o.log, "append a JSON record of this run here (empty to disable)")->capture_default_str();
  app.add_flag("--json", o.as_json, "print the result as one JSON object");

  auto* simulate = app.add_subcommand("simulate", "generate a synthetic touch dataset");
  add_data_flags(simulate, o);
  simulate->add_option("--out", o.out, "dataset file to write")->required();

  auto* train_cmd = app.add_subcommand("train", "train a decoder and write its best checkpoint");
  add_data_flags(train_cmd, o);
  add_split_flags(train_cmd, o);
  add_model_flags(train_cmd, o);
  add_train_flags(train_cmd, o);
  train_cmd->add_option("--out", o.out, "checkpoint file to write")->required();

  auto* eval_cmd = app.add_subcommand("eval", "CER, WER and decode time on a split");
  add_data_flags(eval_cmd, o);
  add_split_flags(eval_cmd, o);
  add_model_flags(eval_cmd, o);
  eval_cmd->add_option("--checkpoint", o.checkpoint);
  eval_cmd->add_option("--split", o.split, "test, val or train")->capture_default_str();

  auto* ablate = app.add_subcommand("ablate", "train and evaluate a matrix of model cells");
  add_data_flags(ablate, o);
  add_split_flags(ablate, o);
  add_train_flags(ablate, o);
  ablate->add_option("--cells", o.cells, "comma list like dnd:s2u64au,bi-rnn:s3u32,gaussian-baseline")
      ->capture_default_str();
  ablate->add_option("--out", o.out, "CSV file to write");

  std::string touch_file;
  auto* decode = app.add_subcommand("decode", "decode a touch file with a checkpoint");
  add_model_flags(decode, o);
  decode->add_option("--checkpoint", o.checkpoint)->required();
  decode->add_option("touches", touch_file, "JSON array of [x, y] or a dataset file")->required();

  auto* gradcheck = app.add_subcommand("gradcheck", "compare analytic and numeric gradients");
  add_model_flags(gradcheck, o);
  gradcheck->add_option("--steps", o.steps, "sequence length")->capture_default_str();
  gradcheck->add_option("--sample", o.sample, "entries per parameter, 0 for all")->capture_default_str();

  auto* serve_cmd = app.add_subcommand("serve", "WebSocket decode service");
  add_model_flags(serve_cmd, o);
  serve_cmd->add_option("--checkpoint", o.checkpoint)->required();
  serve_cmd->add_option("--address", o.address)->capture_default_str();
  serve_cmd->add_option("--port", o.port, "0 picks a free port")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string effective = app.config_to_str(true, false);
  std::cerr << "# effective config\n" << effective << "# end config\n";

  json record = {{"time", utc_now()}, {"command", sub->get_name()}, {"config", effective}};
  try {
    json result;
    const std::string name = sub->get_name();
    if (name == "simulate") result = run_simulate(o);
    else if (name == "train") result = run_train(o);
    else if (name == "eval") result = run_eval(o, *sub);
    else if (name == "ablate") result = run_ablate(o);
    else if (name == "decode") result = run_decode(o, *sub, touch_file);
    else if (name == "gradcheck") result = run_gradcheck(o);
    else if (name == "serve") result = run_serve(o, *sub);
    record["status"] = "ok";
    record["result"] = result;
    append_log(o.log, record);
    return 0;
  } catch (const std::exception& e) {
    record["status"] = "error";
    record["error"] = e.what();
    append_log(o.log, record);
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
