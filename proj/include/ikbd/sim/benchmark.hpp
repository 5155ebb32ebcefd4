#pragma once

#include <algorithm>
#include <fstream>
#include <string>
#include <vector>

#include "ikbd/core/phrase.hpp"
#include "ikbd/core/split.hpp"
#include "ikbd/sim/simulator.hpp"

namespace ikbd::sim {

/// One sentence per line; lines that clean to nothing are skipped.
inline std::vector<std::string> load_corpus(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open corpus " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(is, line)) {
    try {
      std::string s = preprocess_phrase(line);
      // a sentence must not carry its own enter; the simulator adds one
      std::replace(s.begin(), s.end(), '\n', ' ');
      out.push_back(std::move(s));
    } catch (const RejectedPhrase&) {
    }
  }
  return out;
}

inline std::string default_corpus_path() {
#ifdef IKBD_DATA_DIR
  return std::string(IKBD_DATA_DIR) + "/phrases.txt";
#else
  return "data/phrases.txt";
#endif
}

struct BenchmarkConfig {
  SimConfig sim;  // defaults: 12 users x 150 phrases, seed 1234
  std::size_t n_test_users = 2;
  std::size_t n_val_users = 1;
  std::size_t augment_copies = 5;
  double augment_max_px_x = 75.81;
  double augment_max_px_y = 44.69;
};

struct Benchmark {
  Dataset full;
  DatasetSplit split;  // split.train is already augmented
  std::size_t train_samples_raw = 0;
};

/// The standard synthetic benchmark: simulate, split by user, augment train.
inline Benchmark make_benchmark(const std::vector<std::string>& corpus, const BenchmarkConfig& cfg = {}) {
  Benchmark b;
  b.full = simulate_dataset(cfg.sim, corpus);
  b.split = split_dataset(b.full, cfg.n_test_users, cfg.n_val_users, cfg.sim.seed);
  b.train_samples_raw = b.split.train.size();
  auto rng = detail::stream(cfg.sim.seed, 0xA06u);
  b.split.train = augment_offsets(b.split.train, cfg.augment_copies, cfg.augment_max_px_x,
                                  cfg.augment_max_px_y, rng);
  return b;
}

}  // namespace ikbd::sim
