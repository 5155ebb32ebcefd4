#include <cmath>
#include <map>
#include <random>

#include <gtest/gtest.h>

#include "ikbd/sim/benchmark.hpp"
#include "ikbd/sim/simulator.hpp"

using namespace ikbd;
using namespace ikbd::sim;

namespace {

SimConfig quiet_config() {
  SimConfig c;
  c.scale_h_mean = 1.0;
  c.scale_h_std = 0.0;
  c.scale_v_mean = 1.0;
  c.scale_v_std = 0.0;
  c.offset_std_px_x = 0.0;
  c.offset_std_px_y = 0.0;
  c.tap_sigma_mm = 0.0;
  c.drift_step_mm = 0.0;
  c.rotation_range_deg = 0.0;
  return c;
}

int idx(char c) { return CharacterDictionary::index_of(c); }

}  // namespace

TEST(Template, RowsIncreaseLeftToRight) {
  const auto t = reference_template();
  std::map<double, std::vector<double>> rows;
  for (char c : std::string("qwertyuiopasdfghjkl'\nzxcvbnm.")) {
    rows[t[std::size_t(idx(c))].y].push_back(t[std::size_t(idx(c))].x);
  }
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& [y, xs] : rows) {
    for (std::size_t i = 1; i < xs.size(); ++i) EXPECT_LT(xs[i - 1], xs[i]) << "row y=" << y;
  }
  EXPECT_GT(t[CharacterDictionary::kSpace].y, rows.rbegin()->first);
}

TEST(Template, PitchComesFromNominalSize) {
  const auto t = reference_template(259.0, 125.9);
  EXPECT_NEAR(t[std::size_t(idx('w'))].x - t[std::size_t(idx('q'))].x, 25.9, 1e-12);
  EXPECT_NEAR(t[std::size_t(idx('a'))].y - t[std::size_t(idx('q'))].y, 125.9 / 4, 1e-12);
  EXPECT_NEAR(t[std::size_t(idx('a'))].x - t[std::size_t(idx('q'))].x, 0.25 * 25.9, 1e-12);
  EXPECT_NEAR(t[std::size_t(idx('z'))].x - t[std::size_t(idx('q'))].x, 0.75 * 25.9, 1e-12);
}

TEST(MentalModelSampling, NoSpreadGivesTemplateCenteredOnScreen) {
  auto cfg = quiet_config();
  std::mt19937_64 rng(1);
  auto m = sample_mental_model(cfg, rng);
  const auto t = reference_template(259.0, 125.9);
  for (int i = 0; i < CharacterDictionary::kTypeable; ++i) {
    const Vec2 p = m.key_position_mm(i);
    EXPECT_NEAR(p.x, t[std::size_t(i)].x + cfg.screen.width_mm / 2, 1e-12);
    EXPECT_NEAR(p.y, t[std::size_t(i)].y + cfg.screen.height_mm / 2, 1e-12);
  }
  EXPECT_EQ(m.scale_h, 1.0);
  EXPECT_EQ(m.rotation_deg, 0.0);
}

TEST(MentalModelSampling, HorizontalScaleStretchesRowsOnly) {
  auto cfg = quiet_config();
  std::mt19937_64 rng(2);
  auto m = sample_mental_model(cfg, rng);
  const double al = m.key_position_mm('l').x - m.key_position_mm('a').x;
  const double pitch = m.key_position_mm('a').y - m.key_position_mm('q').y;
  m.scale_h = 2.0;
  EXPECT_NEAR(m.key_position_mm('l').x - m.key_position_mm('a').x, 2 * al, 1e-12);
  EXPECT_NEAR(m.key_position_mm('a').y - m.key_position_mm('q').y, pitch, 1e-12);
}

TEST(MentalModelSampling, SpacePDistanceMeanNearTemplate) {
  SimConfig cfg;
  const auto t = reference_template();
  const double expected = (t[std::size_t(idx('p'))] - t[CharacterDictionary::kSpace]).norm();
  std::mt19937_64 rng(3);
  double sum = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    auto m = sample_mental_model(cfg, rng);
    EXPECT_GT(m.scale_h, 0.5);
    EXPECT_GT(m.scale_v, 0.5);
    EXPECT_LE(std::abs(m.rotation_deg), 15.0);
    sum += (m.key_position_mm('p') - m.key_position_mm(' ')).norm();
  }
  EXPECT_LT(std::abs(sum / n - expected) / expected, 0.05);
}

TEST(MentalModelSampling, RejectsBadConfig) {
  SimConfig cfg;
  cfg.tap_sigma_mm = -1.0;
  std::mt19937_64 rng(4);
  EXPECT_THROW(sample_mental_model(cfg, rng), ConfigError);
  cfg = SimConfig{};
  cfg.n_users = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(TypePhrase, NoiseFreeTouchesAreKeyCentersAndRepeat) {
  auto cfg = quiet_config();
  cfg.scale_h_mean = 0.9;
  cfg.rotation_range_deg = 10.0;
  std::mt19937_64 rng(5);
  auto m = sample_mental_model(cfg, rng);
  const std::string phrase = "the quick fox.\nit's";
  auto a = type_phrase(m, phrase, rng);
  auto b = type_phrase(m, phrase, rng);
  EXPECT_EQ(a.touches, b.touches);
  for (std::size_t i = 0; i < phrase.size(); ++i) {
    const Vec2 k = m.key_position_mm(phrase[i]);
    EXPECT_NEAR(a.touches[i].x, k.x / cfg.screen.width_mm, 1e-15);
    EXPECT_NEAR(a.touches[i].y, k.y / cfg.screen.height_mm, 1e-15);
  }
  EXPECT_NO_THROW(validate_sample(a));
}

TEST(TypePhrase, RejectsPaddingAndEmpty) {
  auto cfg = quiet_config();
  std::mt19937_64 rng(6);
  auto m = sample_mental_model(cfg, rng);
  EXPECT_THROW(type_phrase(m, "a#", rng), ValidationError);
  EXPECT_THROW(type_phrase(m, "", rng), ValidationError);
}

TEST(TypePhrase, DriftGrowsWithPhrases) {
  auto cfg = quiet_config();
  cfg.drift_step_mm = 0.8;
  double after10 = 0.0, after150 = 0.0;
  const int users = 200;
  for (int u = 0; u < users; ++u) {
    std::mt19937_64 rng(100 + u);
    auto m = sample_mental_model(cfg, rng);
    for (int k = 1; k <= 150; ++k) {
      type_phrase(m, "a", rng);
      if (k == 10) after10 += m.offset_mm.norm();
    }
    after150 += m.offset_mm.norm();
  }
  EXPECT_GT(after150 / users, after10 / users);
}

// Per-coordinate 4-sigma bound; the radial 2-D tail at 4 sigma is exp(-8).
TEST(TypePhrase, TapNoiseStaysWithinFourSigma) {
  auto cfg = quiet_config();
  cfg.tap_sigma_mm = 1.0;
  std::mt19937_64 rng(7);
  auto m = sample_mental_model(cfg, rng);
  const Vec2 a = m.key_position_mm('a');
  std::size_t coords = 0, inside = 0, equal_pairs = 0;
  for (int i = 0; i < 500000; ++i) {
    auto s = type_phrase(m, "aa", rng);
    if (s.touches[0] == s.touches[1]) ++equal_pairs;
    for (const auto& p : s.touches) {
      coords += 2;
      inside += std::abs(p.x * cfg.screen.width_mm - a.x) <= 4.0;
      inside += std::abs(p.y * cfg.screen.height_mm - a.y) <= 4.0;
    }
  }
  EXPECT_EQ(equal_pairs, 0u);
  EXPECT_GE(double(inside) / double(coords), 0.9999);
}

TEST(TypePhrase, ScaleRecoveredFromSpaceAndP) {
  SimConfig cfg;
  cfg.tap_sigma_mm = 0.0;
  cfg.drift_step_mm = 0.0;
  const auto ref = reference_template(cfg.keyboard_width_mm, cfg.keyboard_height_mm);
  for (int u = 0; u < 50; ++u) {
    std::mt19937_64 rng(200 + u);
    auto m = sample_mental_model(cfg, rng);
    auto s = type_phrase(m, "pop up pipe", rng);
    auto est = estimate_scale_space_p(s, cfg.screen, m.rotation_deg, ref);
    ASSERT_TRUE(est.has_value());
    EXPECT_LT(std::abs(est->first - m.scale_h) / m.scale_h, 0.02);
    EXPECT_LT(std::abs(est->second - m.scale_v) / m.scale_v, 0.02);
  }
  TouchSample no_p{"u", "abc", {{0.1, 0.1, {}}, {0.2, 0.2, {}}, {0.3, 0.3, {}}}};
  EXPECT_FALSE(estimate_scale_space_p(no_p, cfg.screen, 0.0, ref).has_value());
}

TEST(Simulate, DeterministicAndValid) {
  SimConfig cfg;
  cfg.n_users = 3;
  cfg.phrases_per_user = 20;
  std::vector<std::string> corpus{"hello world", "it's a test.", "quiz the jumpy ox"};
  auto a = simulate_dataset(cfg, corpus);
  auto b = simulate_dataset(cfg, corpus);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.size(), 60u);
  EXPECT_EQ(a.users(), (std::vector<std::string>{"u00", "u01", "u02"}));
  for (const auto& s : a.samples) {
    EXPECT_NO_THROW(validate_sample(s));
    EXPECT_NE(s.phrase.find('\n'), std::string::npos);
    for (const auto& p : s.touches) {
      EXPECT_GE(p.x, 0.0);
      EXPECT_LE(p.x, 1.0);
      EXPECT_GE(p.y, 0.0);
      EXPECT_LE(p.y, 1.0);
    }
  }
  cfg.seed = 99;
  EXPECT_NE(simulate_dataset(cfg, corpus), a);
  EXPECT_THROW(simulate_dataset(cfg, {}), ValidationError);
}

TEST(Augment, CountsAndZeroOffset) {
  SimConfig cfg;
  cfg.n_users = 5;
  cfg.phrases_per_user = 20;
  auto d = simulate_dataset(cfg, {"abc def", "ghi"});
  std::mt19937_64 rng(8);
  auto out = augment_offsets(d, 5, 75.81, 44.69, rng);
  EXPECT_EQ(out.size(), 600u);
  auto same = augment_offsets(d, 2, 0.0, 0.0, rng);
  for (std::size_t i = 0; i < same.size(); ++i) EXPECT_EQ(same.samples[i], d.samples[i % d.size()]);
  EXPECT_THROW(augment_offsets(d, 0, 1.0, 1.0, rng), ConfigError);
}

TEST(Augment, CopiesAreRigidTranslations) {
  SimConfig cfg;
  cfg.n_users = 2;
  cfg.phrases_per_user = 30;
  auto d = simulate_dataset(cfg, {"the lazy dog", "sat on a mat."});
  std::mt19937_64 rng(9);
  auto out = augment_offsets(d, 3, 75.81, 44.69, rng);
  auto interior = [](const TouchPoint& p) { return p.x > 0 && p.x < 1 && p.y > 0 && p.y < 1; };
  for (std::size_t i = d.size(); i < out.size(); ++i) {
    const auto& orig = d.samples[i % d.size()];
    const auto& copy = out.samples[i];
    EXPECT_EQ(copy.phrase, orig.phrase);
    for (std::size_t j = 1; j < copy.touches.size(); ++j) {
      if (!interior(copy.touches[j]) || !interior(copy.touches[0])) continue;
      EXPECT_NEAR(copy.touches[j].x - copy.touches[0].x, orig.touches[j].x - orig.touches[0].x, 1e-12);
      EXPECT_NEAR(copy.touches[j].y - copy.touches[0].y, orig.touches[j].y - orig.touches[0].y, 1e-12);
    }
    EXPECT_LE(std::abs(copy.touches[0].x - orig.touches[0].x), 75.81 / 1920 + 1e-12);
    EXPECT_LE(std::abs(copy.touches[0].y - orig.touches[0].y), 44.69 / 1080 + 1e-12);
  }
}

TEST(Benchmark, CorpusAndStandardShape) {
  auto corpus = load_corpus(default_corpus_path());
  EXPECT_GE(corpus.size(), 500u);
  for (const auto& s : corpus) EXPECT_EQ(s.find('\n'), std::string::npos);
  BenchmarkConfig cfg;
  cfg.sim.phrases_per_user = 10;
  auto b = make_benchmark(corpus, cfg);
  EXPECT_EQ(b.full.size(), 120u);
  EXPECT_EQ(b.split.test.users().size(), 2u);
  EXPECT_EQ(b.split.val.users().size(), 1u);
  EXPECT_EQ(b.train_samples_raw, 90u);
  EXPECT_EQ(b.split.train.size(), 540u);
  EXPECT_THROW(load_corpus("/nonexistent/corpus.txt"), Error);
}
