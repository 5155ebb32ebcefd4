#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <string>

#include "ikbd/core/types.hpp"
#include "ikbd/error.hpp"

namespace ikbd {

struct DatasetSplit {
  Dataset train;
  Dataset val;
  Dataset test;
};

/// User-disjoint train/val/test partition. Users are shuffled with `seed`;
/// the first `n_test_users` go to test, the next `n_val_users` to validation
/// and the rest to train. Sample order within each split is preserved.
inline DatasetSplit split_dataset(const Dataset& d, std::size_t n_test_users = 2,
                                  std::size_t n_val_users = 1, std::uint64_t seed = 0) {
  auto users = d.users();
  if (users.size() < n_test_users + n_val_users + 1) {
    throw ValidationError("split needs at least " + std::to_string(n_test_users + n_val_users + 1) +
                          " users, dataset has " + std::to_string(users.size()));
  }
  std::mt19937_64 rng(seed);
  std::shuffle(users.begin(), users.end(), rng);
  std::set<std::string> test(users.begin(), users.begin() + n_test_users);
  std::set<std::string> val(users.begin() + n_test_users,
                            users.begin() + n_test_users + n_val_users);

  DatasetSplit out;
  out.train.screen = out.val.screen = out.test.screen = d.screen;
  for (const auto& s : d.samples) {
    if (test.count(s.user_id)) {
      out.test.samples.push_back(s);
    } else if (val.count(s.user_id)) {
      out.val.samples.push_back(s);
    } else {
      out.train.samples.push_back(s);
    }
  }
  return out;
}

}  // namespace ikbd
