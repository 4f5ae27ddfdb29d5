#pragma once

// Synthetic cohort generator with planted, tunable attribute and identity
// signals. Stands in for private real-world data: every effect is injected
// with a known latent so attack power can be asserted against ground truth.

#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "stepleak/core.hpp"
#include "stepleak/eval.hpp"

namespace stepleak {

struct SynthConfig {
  int n_users = 500;
  std::uint64_t seed = 0;
  int age_min = 30;
  int age_max = 91;
  int age_threshold = 55;
  int cap = 45;  // per-15s step ceiling (~3 steps/s sprint)

  // Poisson rate while walking, per 8-hour block: night / work / leisure.
  std::array<double, 3> block_rates = {0.1, 6.0, 4.0};

  // older users walk with proportionally lower cadence
  double age_effect = 0.7;
  // female users have longer walking episodes
  double gender_effect = 0.5;
  // education is drawn against an age-coupled latent; 0.22 realizes an
  // age-education correlation of roughly -0.2 at cohort scale
  double edu_coupling = 0.22;
  // stddev of per-user log-multipliers on each 3-hour slot (identity signal)
  double fingerprint_sigma = 0.0;

  // walk/rest alternation; disabled gives a dense Poisson stream
  bool episodes = true;
  double walk_mean_periods = 20.0;
  double rest_mean_periods = 100.0;

  void validate() const {
    if (n_users < 0) throw DataError("synth: n_users must be >= 0");
    if (cap < 1) throw DataError("synth: cap must be >= 1");
    if (age_min < 18 || age_max > 120 || age_min > age_max)
      throw DataError("synth: age range must lie in [18,120]");
    for (double r : block_rates)
      if (r < 0 || !std::isfinite(r)) throw DataError("synth: rates must be >= 0");
    if (!std::isfinite(age_effect) || !std::isfinite(gender_effect) ||
        !std::isfinite(edu_coupling) || !std::isfinite(fingerprint_sigma))
      throw DataError("synth: effect sizes must be finite");
    if (fingerprint_sigma < 0) throw DataError("synth: fingerprint_sigma >= 0");
    if (walk_mean_periods < 1 || rest_mean_periods < 1)
      throw DataError("synth: episode means must be >= 1");
  }
};

constexpr int kSlotsPerDay = 8;                       // 3-hour slots
constexpr int kSlotPeriods = kPeriodsPerDay / kSlotsPerDay;  // 720

/// Ground-truth latents retained per generated user.
struct UserLatents {
  std::string user_id;
  double age_rate_factor = 1.0;
  double walk_mean = 0;
  std::array<double, kSlotsPerDay> fingerprint{};
};

struct SynthCohort {
  Cohort cohort;
  std::vector<UserLatents> latents;
};

namespace detail {

inline std::string synth_user_id(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "u%05d", i);
  return buf;
}

}  // namespace detail

/// Generates a cohort. Per-user streams are seeded independently from the
/// master seed, so output is identical regardless of generation order.
inline SynthCohort generate(const SynthConfig& cfg) {
  cfg.validate();
  SynthCohort out;
  for (int i = 0; i < cfg.n_users; ++i) {
    Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(i)));
    UserRecord rec;
    rec.series.user_id = detail::synth_user_id(i);

    // attributes first, then the rate curve they shape
    std::uniform_int_distribution<int> age_dist(cfg.age_min, cfg.age_max);
    rec.attrs.age = age_dist(rng);
    std::bernoulli_distribution coin(0.5);
    rec.attrs.gender = coin(rng) ? Gender::female : Gender::male;

    const double age_span = std::max(1, cfg.age_max - cfg.age_min);
    const double z_age =
        (rec.attrs.age - (cfg.age_min + cfg.age_max) / 2.0) / (age_span / std::sqrt(12.0));
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double edu_latent = -cfg.edu_coupling * z_age + gauss(rng);
    const double latent_sd = std::sqrt(1.0 + cfg.edu_coupling * cfg.edu_coupling);
    // ~5% low education, remainder split at the latent median
    if (edu_latent < -1.6449 * latent_sd)
      rec.attrs.education = Education::low;
    else
      rec.attrs.education = edu_latent > 0 ? Education::high : Education::medium;

    UserLatents lat;
    lat.user_id = rec.series.user_id;
    lat.age_rate_factor =
        1.0 - cfg.age_effect * (rec.attrs.age - cfg.age_min) / age_span;
    lat.walk_mean =
        cfg.walk_mean_periods *
        (rec.attrs.gender == Gender::female ? 1.0 + cfg.gender_effect : 1.0);
    for (int s = 0; s < kSlotsPerDay; ++s)
      lat.fingerprint[s] = cfg.fingerprint_sigma > 0
                               ? std::exp(cfg.fingerprint_sigma * gauss(rng))
                               : 1.0;

    rec.series.counts.resize(kPeriodsPerWeek);
    bool walking = !cfg.episodes;
    int state_left = 0;
    std::geometric_distribution<int> walk_len(1.0 / lat.walk_mean);
    std::geometric_distribution<int> rest_len(1.0 / cfg.rest_mean_periods);
    for (int p = 0; p < kPeriodsPerWeek; ++p) {
      if (cfg.episodes) {
        if (state_left == 0) {
          walking = !walking;
          state_left = 1 + (walking ? walk_len(rng) : rest_len(rng));
        }
        --state_left;
      }
      const int in_day = p % kPeriodsPerDay;
      const int block = in_day / (kPeriodsPerDay / 3);
      const int slot = in_day / kSlotPeriods;
      const double rate = cfg.block_rates[block] * lat.age_rate_factor *
                          lat.fingerprint[slot];
      int steps = 0;
      if (walking && rate > 0) {
        std::poisson_distribution<int> pois(rate);
        steps = std::min(cfg.cap, pois(rng));
      }
      rec.series.counts[p] = steps;
    }

    out.cohort.records.push_back(derive_labels(std::move(rec), cfg.age_threshold));
    out.latents.push_back(std::move(lat));
  }
  out.cohort.stats = compute_stats(out.cohort.records);
  return out;
}

struct SignalReport {
  // Cohen's d between attribute classes on the per-user mean peak cadence.
  double class_separation = 0;
  double age_education_correlation = 0;
  std::array<double, 2> class_means{};
};

/// Measures the realized planted signal so acceptance thresholds can be
/// justified against ground truth rather than assumed.
inline SignalReport planted_signal_strength(const SynthCohort& sc,
                                            const std::string& attribute) {
  SignalReport report;
  std::array<std::vector<double>, 2> stat_by_class;
  auto label_of = [&](const UserRecord& r) -> int {
    if (attribute == "age") return r.labels.age_bin;
    if (attribute == "gender") return r.labels.gender_bin;
    if (attribute == "education")
      return r.labels.edu_bin ? *r.labels.edu_bin : -1;
    throw DataError("unknown attribute '" + attribute + "'");
  };
  for (const auto& r : sc.cohort.records) {
    const int lbl = label_of(r);
    if (lbl < 0) continue;
    // mean of per-slot maxima over the week: a cadence-peak statistic
    double acc = 0;
    int n_slots = 0;
    for (int s = 0; s < kPeriodsPerWeek; s += kSlotPeriods) {
      int mx = 0;
      for (int p = s; p < s + kSlotPeriods; ++p)
        mx = std::max(mx, r.series.counts[p]);
      acc += mx;
      ++n_slots;
    }
    stat_by_class[lbl].push_back(acc / n_slots);
  }
  const auto [m0, s0] = detail::mean_std(stat_by_class[0]);
  const auto [m1, s1] = detail::mean_std(stat_by_class[1]);
  report.class_means = {m0, m1};
  const double n0 = static_cast<double>(stat_by_class[0].size());
  const double n1 = static_cast<double>(stat_by_class[1].size());
  const double pooled =
      std::sqrt((n0 * s0 * s0 + n1 * s1 * s1) / std::max(1.0, n0 + n1 - 2.0));
  report.class_separation = pooled > 0 ? (m1 - m0) / pooled : 0.0;
  if (sc.cohort.records.size() >= 2) {
    const auto corr = attribute_correlation(sc.cohort);
    report.age_education_correlation = corr.coef[0][1];
  }
  return report;
}

}  // namespace stepleak
