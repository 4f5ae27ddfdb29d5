#include "stepleak/synth.hpp"

#include <gtest/gtest.h>

#include <algorithm>

namespace stepleak {
namespace {

TEST(SynthConfig, ValidationErrors) {
  SynthConfig cfg;
  cfg.n_users = -1;
  EXPECT_THROW(cfg.validate(), DataError);
  cfg = {};
  cfg.cap = 0;
  EXPECT_THROW(cfg.validate(), DataError);
  cfg = {};
  cfg.age_min = 60;
  cfg.age_max = 50;
  EXPECT_THROW(cfg.validate(), DataError);
  cfg = {};
  cfg.block_rates[1] = -1.0;
  EXPECT_THROW(cfg.validate(), DataError);
  cfg = {};
  cfg.fingerprint_sigma = -0.1;
  EXPECT_THROW(cfg.validate(), DataError);
  cfg = {};
  cfg.walk_mean_periods = 0.5;
  EXPECT_THROW(cfg.validate(), DataError);
  cfg = {};
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Generate, ShapesAndAttributeRanges) {
  SynthConfig cfg;
  cfg.n_users = 20;
  cfg.seed = 1;
  const auto sc = generate(cfg);
  ASSERT_EQ(sc.cohort.records.size(), 20u);
  ASSERT_EQ(sc.latents.size(), 20u);
  EXPECT_EQ(sc.cohort.stats.n_users, 20u);
  for (const auto& r : sc.cohort.records) {
    EXPECT_EQ(r.series.counts.size(),
              static_cast<std::size_t>(kPeriodsPerWeek));
    EXPECT_GE(r.attrs.age, cfg.age_min);
    EXPECT_LE(r.attrs.age, cfg.age_max);
    EXPECT_EQ(r.labels.age_bin, r.attrs.age >= cfg.age_threshold ? 1 : 0);
    for (int c : r.series.counts) {
      EXPECT_GE(c, 0);
      EXPECT_LE(c, cfg.cap);
    }
  }
  EXPECT_EQ(sc.cohort.records[0].series.user_id, "u00000");
  EXPECT_EQ(sc.cohort.records[19].series.user_id, "u00019");
}

TEST(Generate, DeterministicAndPerUserSeeded) {
  SynthConfig cfg;
  cfg.n_users = 6;
  cfg.seed = 42;
  cfg.fingerprint_sigma = 0.4;
  const auto a = generate(cfg);
  const auto b = generate(cfg);
  for (int i = 0; i < 6; ++i) {
    EXPECT_EQ(a.cohort.records[i].series.counts,
              b.cohort.records[i].series.counts);
    EXPECT_EQ(a.cohort.records[i].attrs.age, b.cohort.records[i].attrs.age);
  }
  // users are streamed independently: a smaller run is a prefix
  cfg.n_users = 3;
  const auto small = generate(cfg);
  for (int i = 0; i < 3; ++i)
    EXPECT_EQ(small.cohort.records[i].series.counts,
              a.cohort.records[i].series.counts);
  cfg.n_users = 6;
  cfg.seed = 43;
  const auto other = generate(cfg);
  bool differs = false;
  for (int i = 0; i < 6; ++i)
    if (other.cohort.records[i].series.counts !=
        a.cohort.records[i].series.counts)
      differs = true;
  EXPECT_TRUE(differs);
}

TEST(Generate, FlatModeMatchesPoissonMean) {
  // episodes off and all planted effects muted: every work-block period is an
  // independent capped Poisson draw at the block rate
  SynthConfig cfg;
  cfg.n_users = 10;
  cfg.seed = 3;
  cfg.episodes = false;
  cfg.age_effect = 0.0;
  cfg.gender_effect = 0.0;
  cfg.block_rates = {0.1, 6.0, 4.0};
  const auto sc = generate(cfg);
  double sum = 0;
  std::size_t n = 0;
  const int block_len = kPeriodsPerDay / 3;
  for (const auto& r : sc.cohort.records)
    for (int d = 0; d < kDaysPerWeek; ++d)
      for (int p = block_len; p < 2 * block_len; ++p) {
        sum += r.series.counts[d * kPeriodsPerDay + p];
        ++n;
      }
  const double mean = sum / static_cast<double>(n);
  // cap 45 at rate 6 truncates a negligible mass; ~134k samples
  EXPECT_NEAR(mean, 6.0, 0.05);
}

TEST(Generate, AgeEffectLowersOlderUsersCadence) {
  SynthConfig cfg;
  cfg.n_users = 120;
  cfg.seed = 4;
  const auto sc = generate(cfg);
  const auto report = planted_signal_strength(sc, "age");
  EXPECT_LT(report.class_separation, -0.8);  // old users walk markedly less
  EXPECT_LT(report.class_means[1], report.class_means[0]);
}

TEST(Generate, ZeroAgeEffectHasNoSeparation) {
  SynthConfig cfg;
  cfg.n_users = 120;
  cfg.seed = 5;
  cfg.age_effect = 0.0;
  const auto sc = generate(cfg);
  const auto report = planted_signal_strength(sc, "age");
  EXPECT_LT(std::abs(report.class_separation), 0.35);
}

TEST(Generate, EducationCouplesNegativelyWithAge) {
  SynthConfig cfg;
  cfg.n_users = 400;
  cfg.seed = 6;
  const auto sc = generate(cfg);
  const auto corr = attribute_correlation(sc.cohort);
  EXPECT_LT(corr.coef[0][1], -0.05);
  EXPECT_GT(corr.coef[0][1], -0.4);
}

TEST(Generate, ZeroCouplingLeavesEducationIndependent) {
  SynthConfig cfg;
  cfg.n_users = 400;
  cfg.seed = 7;
  cfg.edu_coupling = 0.0;
  const auto sc = generate(cfg);
  const auto corr = attribute_correlation(sc.cohort);
  EXPECT_LT(std::abs(corr.coef[0][1]), 0.12);
}

TEST(Generate, GenderEffectExtendsWalkEpisodes) {
  SynthConfig cfg;
  cfg.n_users = 60;
  cfg.seed = 8;
  const auto sc = generate(cfg);
  for (std::size_t i = 0; i < sc.latents.size(); ++i) {
    const auto& r = sc.cohort.records[i];
    const double expected =
        cfg.walk_mean_periods *
        (r.attrs.gender == Gender::female ? 1.0 + cfg.gender_effect : 1.0);
    EXPECT_DOUBLE_EQ(sc.latents[i].walk_mean, expected);
  }
}

TEST(Generate, FingerprintLatents) {
  SynthConfig cfg;
  cfg.n_users = 5;
  cfg.seed = 9;
  const auto plain = generate(cfg);
  for (const auto& lat : plain.latents)
    for (double f : lat.fingerprint) EXPECT_DOUBLE_EQ(f, 1.0);
  cfg.fingerprint_sigma = 0.5;
  const auto marked = generate(cfg);
  bool varied = false;
  for (const auto& lat : marked.latents)
    for (double f : lat.fingerprint)
      if (f != 1.0) varied = true;
  EXPECT_TRUE(varied);
  for (const auto& lat : marked.latents)
    for (double f : lat.fingerprint) EXPECT_GT(f, 0.0);
}

TEST(Generate, NightBlockIsQuiet) {
  SynthConfig cfg;
  cfg.n_users = 10;
  cfg.seed = 10;
  const auto sc = generate(cfg);
  const int block_len = kPeriodsPerDay / 3;
  double night = 0, work = 0;
  for (const auto& r : sc.cohort.records)
    for (int d = 0; d < kDaysPerWeek; ++d)
      for (int p = 0; p < block_len; ++p) {
        night += r.series.counts[d * kPeriodsPerDay + p];
        work += r.series.counts[d * kPeriodsPerDay + block_len + p];
      }
  EXPECT_LT(night, work / 5.0);
}

TEST(PlantedSignal, UnknownAttributeThrows) {
  SynthConfig cfg;
  cfg.n_users = 4;
  const auto sc = generate(cfg);
  EXPECT_THROW(planted_signal_strength(sc, "income"), DataError);
}

}  // namespace
}  // namespace stepleak
