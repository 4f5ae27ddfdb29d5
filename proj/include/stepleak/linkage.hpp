#pragma once

// Temporal linkability attack: within-user day-pair construction, the two
// unsupervised similarity attacks, the random-forest-on-L1-distance attack,
// and the dense siamese attack, all evaluated by AUC.

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "stepleak/core.hpp"
#include "stepleak/eval.hpp"
#include "stepleak/features.hpp"
#include "stepleak/learners.hpp"

namespace stepleak {

enum class SimilarityMetric { euclidean, cosine };

/// One (user, day) vs (user, day) sample; indices into PairSet::day_vectors.
struct LinkPair {
  int left_user = 0;
  int left_day = 0;
  int right_user = 0;
  int right_day = 0;
  int label = 0;  // 1 = same user
};

struct PairSet {
  std::vector<std::string> user_ids;
  // day_vectors[user][day] is the configured daily feature vector
  std::vector<std::array<std::vector<double>, kDaysPerWeek>> day_vectors;
  std::vector<LinkPair> pairs;
  std::uint64_t seed = 0;
  FeatureConfig config;

  const std::vector<double>& left(const LinkPair& p) const {
    return day_vectors[p.left_user][p.left_day];
  }
  const std::vector<double>& right(const LinkPair& p) const {
    return day_vectors[p.right_user][p.right_day];
  }
  std::size_t n_positive() const {
    std::size_t n = 0;
    for (const auto& p : pairs) n += p.label;
    return n;
  }
};

/// All C(7,2) within-user day pairs as positives plus an equal number of
/// seeded random cross-user pairs, canonicalized as unordered and
/// deduplicated.
inline PairSet build_pairs(const Cohort& cohort, const FeatureConfig& config,
                           std::uint64_t seed) {
  config.validate();
  if (config.scope != Scope::day)
    throw DataError("build_pairs: linkage uses daily-scope features");
  PairSet ps;
  ps.seed = seed;
  ps.config = config;
  const int max_steps = cohort.stats.max_steps;
  for (const auto& r : cohort.records) {
    ps.user_ids.push_back(r.series.user_id);
    std::array<std::vector<double>, kDaysPerWeek> days;
    for (int d = 0; d < kDaysPerWeek; ++d) {
      auto raw = r.series.day(d);
      std::vector<double> v;
      switch (config.method) {
        case Method::raw:
          v.assign(raw.begin(), raw.end());
          break;
        case Method::statistical:
          v = extract_statistical(raw, config.window, config.stats);
          break;
        case Method::distributional:
          v = extract_distributional(raw, config.window, config.bucket,
                                     max_steps);
          break;
      }
      if (config.normalization == Normalization::vector_wise)
        v = normalize_vector_wise(std::move(v));
      else if (config.normalization == Normalization::prob_dist)
        v = normalize_prob_dist(std::move(v));
      days[d] = std::move(v);
    }
    ps.day_vectors.push_back(std::move(days));
  }

  const int n_users = static_cast<int>(ps.user_ids.size());
  for (int u = 0; u < n_users; ++u)
    for (int d1 = 0; d1 < kDaysPerWeek; ++d1)
      for (int d2 = d1 + 1; d2 < kDaysPerWeek; ++d2)
        ps.pairs.push_back({u, d1, u, d2, 1});
  const std::size_t n_pos = ps.pairs.size();

  if (n_users < 2)
    throw DataError("build_pairs: need >= 2 users to sample negative pairs");

  // canonical unordered key; a user-day may recur across pairs, but no
  // unordered pair repeats
  std::set<std::array<int, 4>> seen;
  auto key = [](int u, int d1, int v, int d2) {
    if (std::tie(u, d1) > std::tie(v, d2)) {
      std::swap(u, v);
      std::swap(d1, d2);
    }
    return std::array<int, 4>{u, d1, v, d2};
  };
  Rng rng(mix_seed(seed, 0x6e6567));
  std::uniform_int_distribution<int> pick_user(0, n_users - 1);
  std::uniform_int_distribution<int> pick_day(0, kDaysPerWeek - 1);
  std::size_t n_neg = 0;
  while (n_neg < n_pos) {
    const int u = pick_user(rng), v = pick_user(rng);
    if (u == v) continue;
    const int d1 = pick_day(rng), d2 = pick_day(rng);
    if (!seen.insert(key(u, d1, v, d2)).second) continue;
    ps.pairs.push_back({u, d1, v, d2, 0});
    ++n_neg;
  }
  return ps;
}

/// Mask of features whose variance over the training vectors is >= 1e-3
/// (strictly-below-threshold columns are dropped).
struct VarianceFilter {
  std::vector<bool> keep;

  static VarianceFilter fit(const std::vector<std::vector<double>>& train,
                            double threshold = 1e-3) {
    if (train.size() < 2)
      throw DataError("variance_filter: need >= 2 training vectors");
    const std::size_t d = train.front().size();
    std::vector<double> mean(d, 0.0), ss(d, 0.0);
    for (const auto& v : train)
      for (std::size_t j = 0; j < d; ++j) mean[j] += v[j];
    for (double& m : mean) m /= static_cast<double>(train.size());
    for (const auto& v : train)
      for (std::size_t j = 0; j < d; ++j)
        ss[j] += (v[j] - mean[j]) * (v[j] - mean[j]);
    VarianceFilter f;
    f.keep.resize(d);
    bool any = false;
    for (std::size_t j = 0; j < d; ++j) {
      f.keep[j] = ss[j] / static_cast<double>(train.size()) >= threshold;
      any = any || f.keep[j];
    }
    if (!any) throw DataError("variance_filter: all features dropped");
    return f;
  }

  std::vector<double> apply(const std::vector<double>& v) const {
    if (v.size() != keep.size())
      throw DataError("variance_filter: length mismatch");
    std::vector<double> out;
    out.reserve(keep.size());
    for (std::size_t j = 0; j < v.size(); ++j)
      if (keep[j]) out.push_back(v[j]);
    return out;
  }
};

inline double euclidean_distance(const std::vector<double>& a,
                                 const std::vector<double>& b) {
  if (a.size() != b.size())
    throw DataError("euclidean_distance: length mismatch");
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    acc += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(acc);
}

/// Cosine distance; a zero vector is treated as orthogonal (distance 1).
inline double cosine_distance(const std::vector<double>& a,
                              const std::vector<double>& b) {
  if (a.size() != b.size()) throw DataError("cosine_distance: length mismatch");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 1.0;
  return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

struct SimilarityResult {
  std::vector<double> distances;  // aligned with the given pairs
  double auc = 0;
};

/// Threshold-free evaluation of the unsupervised attack: pairs are ranked by
/// negated distance, which sweeps every possible threshold at once.
inline SimilarityResult similarity_attack(const PairSet& ps,
                                          const std::vector<LinkPair>& pairs,
                                          SimilarityMetric metric) {
  SimilarityResult result;
  std::vector<ScoredSample> scored;
  for (const auto& p : pairs) {
    const double dist = metric == SimilarityMetric::euclidean
                            ? euclidean_distance(ps.left(p), ps.right(p))
                            : cosine_distance(ps.left(p), ps.right(p));
    result.distances.push_back(dist);
    scored.push_back({-dist, p.label});
  }
  result.auc = auc(scored);
  return result;
}

inline SimilarityResult similarity_attack(const PairSet& ps,
                                          SimilarityMetric metric) {
  return similarity_attack(ps, ps.pairs, metric);
}

namespace detail {

/// Fits the variance filter on the constituent vectors of the training pairs.
inline VarianceFilter fit_pair_filter(const PairSet& ps,
                                      const std::vector<LinkPair>& train) {
  std::vector<std::vector<double>> vecs;
  vecs.reserve(train.size() * 2);
  for (const auto& p : train) {
    vecs.push_back(ps.left(p));
    vecs.push_back(ps.right(p));
  }
  return VarianceFilter::fit(vecs);
}

}  // namespace detail

/// RF on element-wise |left - right| of the filtered vectors.
inline double rf_distance_attack(const PairSet& ps,
                                 const std::vector<LinkPair>& train,
                                 const std::vector<LinkPair>& test,
                                 const ForestOptions& forest_opt) {
  const auto filter = detail::fit_pair_filter(ps, train);
  auto l1_features = [&](const LinkPair& p) {
    auto a = filter.apply(ps.left(p));
    const auto b = filter.apply(ps.right(p));
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::abs(a[i] - b[i]);
    return a;
  };
  std::vector<std::vector<double>> x_train;
  std::vector<int> y_train;
  for (const auto& p : train) {
    x_train.push_back(l1_features(p));
    y_train.push_back(p.label);
  }
  RandomForest forest(forest_opt);
  forest.fit(x_train, y_train);
  std::vector<ScoredSample> scored;
  for (const auto& p : test) scored.push_back({forest.predict(l1_features(p)), p.label});
  return auc(scored);
}

/// Dense siamese network trained on pair labels; returns test AUC. Inputs are
/// max-scaled per feature (fitted on the training constituents) so raw count
/// magnitudes cannot saturate the tanh embedding.
inline double siamese_attack(const PairSet& ps,
                             const std::vector<LinkPair>& train,
                             const std::vector<LinkPair>& test,
                             const ModelSpec& spec) {
  const auto filter = detail::fit_pair_filter(ps, train);
  std::vector<std::vector<double>> constituents;
  constituents.reserve(train.size() * 2);
  for (const auto& p : train) {
    constituents.push_back(filter.apply(ps.left(p)));
    constituents.push_back(filter.apply(ps.right(p)));
  }
  const auto scale = FeatureWiseNorm::fit(constituents);
  auto prep = [&](const std::vector<double>& v) {
    return scale.apply(filter.apply(v));
  };
  std::vector<std::vector<double>> A, B;
  std::vector<int> y;
  for (const auto& p : train) {
    A.push_back(prep(ps.left(p)));
    B.push_back(prep(ps.right(p)));
    y.push_back(p.label);
  }
  const auto model = fit_siamese(spec, A, B, y);
  std::vector<ScoredSample> scored;
  for (const auto& p : test)
    scored.push_back(
        {model.siamese_forward(prep(ps.left(p)), prep(ps.right(p))), p.label});
  return auc(scored);
}

enum class LinkAttackKind { euclidean, cosine, rf_standard, dense_siamese };

inline LinkAttackKind parse_link_attack(const std::string& s) {
  if (s == "euclidean") return LinkAttackKind::euclidean;
  if (s == "cosine") return LinkAttackKind::cosine;
  if (s == "rf_standard") return LinkAttackKind::rf_standard;
  if (s == "dense_siamese") return LinkAttackKind::dense_siamese;
  if (s == "cnn_siamese" || s == "lstm_siamese" || s == "bilstm_siamese" ||
      s == "attention_siamese")
    throw DataError("link attack '" + s + "' is recognized but not implemented");
  throw DataError("unknown link attack '" + s + "'");
}

inline const char* to_string(LinkAttackKind k) {
  switch (k) {
    case LinkAttackKind::euclidean: return "euclidean";
    case LinkAttackKind::cosine: return "cosine";
    case LinkAttackKind::rf_standard: return "rf_standard";
    default: return "dense_siamese";
  }
}

struct LinkResult {
  LinkAttackKind attack;
  FeatureConfig config;
  std::vector<double> fold_aucs;
  double mean_auc = 0;
  double std_auc = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
};

/// k-fold CV at the pair level, positives and negatives divided equally
/// across folds. Unsupervised attacks are evaluated on each test fold.
inline LinkResult link_cross_validate(const PairSet& ps, LinkAttackKind attack,
                                      int k, std::uint64_t seed,
                                      const ModelSpec& siamese_spec,
                                      const ForestOptions& forest_opt) {
  LinkResult result;
  result.attack = attack;
  result.config = ps.config;
  std::vector<int> labels;
  for (const auto& p : ps.pairs) labels.push_back(p.label);
  const auto folds = cross_validate(labels, k, {}, mix_seed(seed, 0x6c666f));
  for (int f = 0; f < k; ++f) {
    std::vector<LinkPair> train, test;
    for (std::size_t i = 0; i < ps.pairs.size(); ++i)
      (folds[i] == f ? test : train).push_back(ps.pairs[i]);
    result.n_train = train.size();
    result.n_test = test.size();
    double fold_auc = 0;
    switch (attack) {
      case LinkAttackKind::euclidean:
        fold_auc = similarity_attack(ps, test, SimilarityMetric::euclidean).auc;
        break;
      case LinkAttackKind::cosine:
        fold_auc = similarity_attack(ps, test, SimilarityMetric::cosine).auc;
        break;
      case LinkAttackKind::rf_standard: {
        ForestOptions fo = forest_opt;
        fo.seed = mix_seed(seed, 0x7266ULL + f);
        fold_auc = rf_distance_attack(ps, train, test, fo);
        break;
      }
      case LinkAttackKind::dense_siamese: {
        ModelSpec spec = siamese_spec;
        spec.kind = ModelKind::siamese_dense;
        spec.train.seed = mix_seed(seed, 0x7369ULL + f);
        fold_auc = siamese_attack(ps, train, test, spec);
        break;
      }
    }
    result.fold_aucs.push_back(fold_auc);
  }
  std::tie(result.mean_auc, result.std_auc) =
      detail::mean_std(result.fold_aucs);
  return result;
}

}  // namespace stepleak
