#include <cmath>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "ikbd/sim/benchmark.hpp"
#include "ikbd/train/ablation.hpp"

using namespace ikbd;
using namespace ikbd::train;

namespace {

Dataset smoke_dataset(std::size_t users = 1, std::size_t phrases = 20) {
  sim::SimConfig cfg;
  cfg.n_users = users;
  cfg.phrases_per_user = phrases;
  return sim::simulate_dataset(cfg, sim::load_corpus(sim::default_corpus_path()));
}

TrainConfig smoke_config(int epochs) {
  TrainConfig c;
  dnd::apply_tag(c.model, "s2u32au");
  c.max_epochs = epochs;
  c.batch_size = 4;
  return c;
}

std::string checkpoint_bytes(const dnd::DndModel<float>& m) {
  std::stringstream ss;
  dnd::write_checkpoint(ss, m, dnd::CheckpointHeader{m.config(), 1234, 0, {}});
  return ss.str();
}

}  // namespace

TEST(AdamTest, ZeroGradientLeavesParameters) {
  compute::Parameter<double> p("w", {2, 2});
  p.w() << 1, 2, 3, 4;
  const auto before = p.w();
  Adam<double> adam;
  adam.step({&p}, 0.001);
  EXPECT_EQ(p.w(), before);
  EXPECT_EQ(adam.steps(), 1);
}

TEST(AdamTest, FirstStepIsBiasCorrectedUnitUpdate) {
  compute::Parameter<double> p("w", {1});
  p.w()(0, 0) = 0.5;
  p.g()(0, 0) = 1.0;
  Adam<double> adam;
  adam.step({&p}, 0.001);
  // m_hat = 1, v_hat = 1
  const double expected = -0.001 / (1.0 + 1e-8);
  EXPECT_NEAR(p.w()(0, 0) - 0.5, expected, 1e-15);
  EXPECT_NEAR(p.w()(0, 0) - 0.5, -0.001, 1e-10);
}

TEST(AdamTest, RejectsNonFiniteGradient) {
  compute::Parameter<float> p("w", {3});
  p.g()(0, 1) = std::numeric_limits<float>::quiet_NaN();
  Adam<float> adam;
  EXPECT_THROW(adam.step({&p}, 0.001), NumericError);
}

TEST(ClipTest, RescalesToMaxNorm) {
  compute::Parameter<double> a("a", {1}), b("b", {1});
  a.g()(0, 0) = 3.0;
  b.g()(0, 0) = 4.0;
  EXPECT_DOUBLE_EQ(clip_grad_norm<double>({&a, &b}, 1.0), 5.0);
  EXPECT_NEAR(a.g()(0, 0), 0.6, 1e-15);
  EXPECT_NEAR(b.g()(0, 0), 0.8, 1e-15);
  EXPECT_NEAR(clip_grad_norm<double>({&a, &b}, 5.0), 1.0, 1e-15);
  EXPECT_NEAR(a.g()(0, 0), 0.6, 1e-15);
}

TEST(Schedule, MultiplicativeSteps) {
  LrSchedule up(0.001, 0.1, 10);
  EXPECT_TRUE(up.update(2.0).is_best);
  EXPECT_NEAR(up.lr(), 0.0011, 1e-15);
  EXPECT_FALSE(up.update(2.0).is_best);
  EXPECT_NEAR(up.lr(), 0.0011 * 0.9, 1e-15);
  LrSchedule down(0.001, 0.1, 10);
  down.update(1.0);
  LrSchedule s(0.001, 0.1, 10);
  EXPECT_TRUE(s.update(1.0).is_best);
}

TEST(Schedule, PatienceStopsAtEpochTwelve) {
  LrSchedule s(0.001, 0.1, 10);
  std::vector<double> losses{2.0, 1.5};
  for (int i = 0; i < 10; ++i) losses.push_back(1.5);
  int stopped = 0;
  for (double l : losses) {
    if (s.update(l).stop) {
      stopped = s.epochs();
      break;
    }
  }
  EXPECT_EQ(stopped, 12);
  EXPECT_EQ(s.best_epoch(), 2);
  EXPECT_EQ(s.best(), 1.5);
}

TEST(Schedule, TrajectoryIsAFunctionOfTheLossSequence) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    LrSchedule s(0.001, 0.1, 1000);
    double best = std::numeric_limits<double>::infinity();
    int improved = 0, stagnant = 0;
    for (int e = 0; e < 30; ++e) {
      const double l = u(rng);
      const bool is_best = l < best;
      best = std::min(best, l);
      (is_best ? improved : stagnant)++;
      EXPECT_EQ(s.update(l).is_best, is_best);
    }
    EXPECT_NEAR(s.lr(), 0.001 * std::pow(1.1, improved) * std::pow(0.9, stagnant), 1e-15);
  }
}

TEST(Config, ValidationAndAuxSwitch) {
  TrainConfig c;
  c.lr_rate = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.patience = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.aux = false;
  EXPECT_EQ(c.effective_model().aux_loss_weight, 0.0);
  EXPECT_EQ(c.effective_model().tag(), "s2u64");
  nlohmann::json j = c;
  EXPECT_EQ(j["model"]["aux_loss_weight"], 0.0);
}

TEST(Batches, CoverEverySampleOnce) {
  auto d = smoke_dataset(2, 37);
  auto ptrs = pointers(d);
  std::mt19937_64 rng(4);
  auto batches = make_epoch_batches(ptrs, 8, rng);
  std::multiset<const TouchSample*> seen;
  for (const auto& b : batches) {
    EXPECT_LE(b.size(), 8u);
    seen.insert(b.begin(), b.end());
  }
  EXPECT_EQ(seen.size(), ptrs.size());
  EXPECT_EQ(std::set<const TouchSample*>(seen.begin(), seen.end()).size(), ptrs.size());
}

TEST(Fit, SmokeRunHalvesTrainingLoss) {
  auto d = smoke_dataset();
  auto r = fit(d, d, smoke_config(30));
  ASSERT_FALSE(r.log.empty());
  EXPECT_LT(r.log.back().train_loss, 0.5 * r.initial_train_loss);
  double min_val = std::numeric_limits<double>::infinity();
  for (const auto& e : r.log) min_val = std::min(min_val, e.val_loss);
  EXPECT_EQ(r.best_val_loss, min_val);
  EXPECT_EQ(r.log[std::size_t(r.best_epoch - 1)].val_loss, min_val);
  // the returned model is the one that produced the best validation loss
  EXPECT_FLOAT_EQ(float(validation_loss(r.best_model, d, 4)), float(r.best_val_loss));
}

TEST(Fit, IdenticalSeedsAreBitIdentical) {
  auto d = smoke_dataset(1, 10);
  auto cfg = smoke_config(3);
  std::vector<std::string> best_a, best_b;
  FitHooks ha, hb;
  ha.on_best = [&](const dnd::DndModel<float>& m, const EpochRecord&) { best_a.push_back(checkpoint_bytes(m)); };
  hb.on_best = [&](const dnd::DndModel<float>& m, const EpochRecord&) { best_b.push_back(checkpoint_bytes(m)); };
  auto a = fit(d, d, cfg, ha);
  auto b = fit(d, d, cfg, hb);
  ASSERT_EQ(a.log.size(), b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    EXPECT_EQ(nlohmann::json(a.log[i]).dump(), nlohmann::json(b.log[i]).dump());
  }
  EXPECT_EQ(checkpoint_bytes(a.best_model), checkpoint_bytes(b.best_model));
  EXPECT_EQ(best_a, best_b);
  cfg.seed = 99;
  EXPECT_NE(checkpoint_bytes(fit(d, d, cfg).best_model), checkpoint_bytes(a.best_model));
}

TEST(Fit, CheckpointRoundTripKeepsValidationLoss) {
  auto d = smoke_dataset(1, 10);
  auto r = fit(d, d, smoke_config(2));
  std::stringstream ss(checkpoint_bytes(r.best_model));
  auto loaded = dnd::read_checkpoint<float>(ss);
  EXPECT_EQ(validation_loss(loaded.model, d, 4), validation_loss(r.best_model, d, 4));
}

TEST(Fit, EmptyInputsAreRejected) {
  auto d = smoke_dataset(1, 5);
  EXPECT_THROW(fit(d, Dataset{}, smoke_config(1)), ValidationError);
}

TEST(Ablation, CellNamingFollowsTags) {
  auto cells = parse_matrix("dnd:s2u64au,dnd:s2u64,bi-rnn:s3u32,uni-rnn:s3u64au,gaussian-baseline");
  ASSERT_EQ(cells.size(), 5u);
  EXPECT_EQ(cells[0].label(), "dnd:s2u64au");
  EXPECT_EQ(cells[1].label(), "dnd:s2u64");
  EXPECT_EQ(cells[2].label(), "bi-rnn:s3u32");
  // aux is meaningless without the language-model stack
  EXPECT_EQ(cells[3].label(), "uni-rnn:s3u64");
  EXPECT_EQ(cells[4].label(), "gaussian-baseline:-");
  EXPECT_THROW(parse_cell("dnd"), ConfigError);
  EXPECT_THROW(parse_cell("gru:s2u64"), ConfigError);
}

TEST(Ablation, EmptyMatrixGivesEmptyTable) {
  auto cells = parse_matrix("");
  EXPECT_TRUE(cells.empty());
  auto rows = run_ablation(cells, DatasetSplit{}, TrainConfig{});
  EXPECT_TRUE(rows.empty());
  std::stringstream ss;
  write_ablation_csv(ss, rows);
  EXPECT_EQ(ss.str(), "model,parameter,cer,wer,time_ms,params,best_epoch\n");
}

TEST(Ablation, SmallRunProducesOneRowPerCell) {
  auto d = smoke_dataset(4, 15);
  auto split = split_dataset(d, 1, 1, 7);
  auto base = smoke_config(2);
  auto rows = run_ablation(parse_matrix("bi-rnn:s1u16,gaussian-baseline"), split, base);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].model, "bi-rnn");
  EXPECT_EQ(rows[0].parameter, "s1u16");
  EXPECT_GT(rows[0].parameters, 0u);
  EXPECT_EQ(rows[1].model, "gaussian-baseline");
  for (const auto& r : rows) {
    EXPECT_GE(r.report.cer, 0.0);
    EXPECT_EQ(r.report.n_phrases, split.test.size());
  }
  std::stringstream ss;
  write_ablation_csv(ss, rows);
  std::string line;
  int n = 0;
  while (std::getline(ss, line)) ++n;
  EXPECT_EQ(n, 3);
}
