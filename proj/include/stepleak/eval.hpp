#pragma once

// ROC/AUC (Mann-Whitney tie handling), cross-validation fold construction,
// and a dependency-free PCA projection for figures.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "stepleak/common.hpp"

namespace stepleak {

namespace detail {

inline std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  double m = 0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / static_cast<double>(v.size()))};
}

}  // namespace detail

struct ScoredSample {
  double score = 0;
  int label = 0;  // 0 or 1
};

struct RocPoint {
  double fpr = 0;
  double tpr = 0;
  double threshold = 0;
};

struct RocCurve {
  std::vector<RocPoint> points;
  double auc = 0;
};

/// Mann-Whitney AUC: P(score_pos > score_neg) + 0.5 * P(tie), computed via
/// midranks in O(n log n).
inline double auc(const std::vector<ScoredSample>& samples) {
  std::size_t n_pos = 0, n_neg = 0;
  for (const auto& s : samples) {
    if (!std::isfinite(s.score)) throw DataError("auc: non-finite score");
    (s.label ? n_pos : n_neg)++;
  }
  if (n_pos == 0 || n_neg == 0)
    throw DataError("auc: need at least one positive and one negative");

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return samples[a].score < samples[b].score;
  });
  double rank_sum_pos = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() &&
           samples[order[j]].score == samples[order[i]].score)
      ++j;
    const double midrank = (static_cast<double>(i) + static_cast<double>(j) + 1.0) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (samples[order[k]].label) rank_sum_pos += midrank;
    i = j;
  }
  const double u = rank_sum_pos -
                   static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

/// ROC curve with one point per distinct threshold (descending scores) plus
/// the (0,0) endpoint; auc is the trapezoidal area.
inline RocCurve roc_curve(const std::vector<ScoredSample>& samples) {
  std::size_t n_pos = 0, n_neg = 0;
  for (const auto& s : samples) (s.label ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0)
    throw DataError("roc_curve: need at least one positive and one negative");

  std::vector<ScoredSample> sorted = samples;
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredSample& a, const ScoredSample& b) {
              return a.score > b.score;
            });
  RocCurve curve;
  curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  double area = 0, prev_fpr = 0, prev_tpr = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j].score == sorted[i].score) {
      (sorted[j].label ? tp : fp)++;
      ++j;
    }
    const double fpr = static_cast<double>(fp) / static_cast<double>(n_neg);
    const double tpr = static_cast<double>(tp) / static_cast<double>(n_pos);
    curve.points.push_back({fpr, tpr, sorted[i].score});
    area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
    prev_fpr = fpr;
    prev_tpr = tpr;
    i = j;
  }
  curve.auc = area;
  return curve;
}

/// Stratified k-fold assignment. Items carry a class label and an optional
/// group id; all items of one group land in one fold. Returns fold index per
/// item. Per-class fold sizes are balanced by largest remainder via
/// round-robin assignment of shuffled groups.
inline std::vector<int> cross_validate(const std::vector<int>& labels,
                                       int k,
                                       const std::vector<std::string>& groups,
                                       std::uint64_t seed) {
  if (k < 2) throw DataError("cross_validate: k must be >= 2");
  const std::size_t n = labels.size();
  const bool grouped = !groups.empty();
  if (grouped && groups.size() != n)
    throw DataError("cross_validate: groups/labels size mismatch");

  // Collapse to one unit per group (or per item when ungrouped). A group's
  // class is the class of its first item.
  std::map<std::string, std::vector<std::size_t>> members;
  std::vector<std::pair<std::string, int>> units;  // (key, class)
  for (std::size_t i = 0; i < n; ++i) {
    const std::string key = grouped ? groups[i] : std::to_string(i);
    auto [it, inserted] = members.try_emplace(key);
    it->second.push_back(i);
    if (inserted) units.emplace_back(key, labels[i]);
  }
  if (static_cast<int>(units.size()) < k)
    throw DataError("cross_validate: k exceeds group count");

  std::map<int, std::vector<std::string>> by_class;
  for (const auto& [key, cls] : units) by_class[cls].push_back(key);

  std::vector<int> fold(n, -1);
  Rng rng(seed);
  int offset = 0;  // staggers classes so small classes spread over folds
  for (auto& [cls, keys] : by_class) {
    std::sort(keys.begin(), keys.end());  // input-order invariance
    std::shuffle(keys.begin(), keys.end(), rng);
    for (std::size_t u = 0; u < keys.size(); ++u) {
      const int f = static_cast<int>((u + offset) % k);
      for (std::size_t idx : members[keys[u]]) fold[idx] = f;
    }
    offset = (offset + static_cast<int>(keys.size())) % k;
  }
  return fold;
}

/// Projects mean-centered vectors onto the top-k covariance eigenvectors,
/// found by power iteration with deflation. Component signs are canonicalized
/// so the first nonzero loading is positive.
struct PcaResult {
  std::vector<std::vector<double>> coords;      // n x k
  std::vector<std::vector<double>> components;  // k x d
  std::vector<double> explained_variance;       // k eigenvalues
};

inline PcaResult pca_project(const std::vector<std::vector<double>>& vectors,
                             int k = 2) {
  const std::size_t n = vectors.size();
  if (n < static_cast<std::size_t>(k) + 1)
    throw DataError("pca_project: need at least k+1 vectors");
  const std::size_t d = vectors.front().size();

  std::vector<double> mean(d, 0.0);
  for (const auto& v : vectors)
    for (std::size_t j = 0; j < d; ++j) mean[j] += v[j];
  for (double& m : mean) m /= static_cast<double>(n);

  std::vector<std::vector<double>> centered(n, std::vector<double>(d));
  double total_var = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      centered[i][j] = vectors[i][j] - mean[j];
      total_var += centered[i][j] * centered[i][j];
    }
  if (total_var == 0) throw DataError("pca_project: zero-variance data");

  // covariance (1/n convention)
  std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = a; b < d; ++b)
        cov[a][b] += centered[i][a] * centered[i][b];
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a; b < d; ++b) {
      cov[a][b] /= static_cast<double>(n);
      cov[b][a] = cov[a][b];
    }

  PcaResult result;
  Rng rng(12345);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int c = 0; c < k; ++c) {
    std::vector<double> v(d);
    for (double& x : v) x = gauss(rng);
    double eig = 0;
    for (int iter = 0; iter < 1000; ++iter) {
      std::vector<double> w(d, 0.0);
      for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) w[a] += cov[a][b] * v[b];
      double norm = 0;
      for (double x : w) norm += x * x;
      norm = std::sqrt(norm);
      if (norm == 0) break;
      for (std::size_t a = 0; a < d; ++a) w[a] /= norm;
      double delta = 0;
      for (std::size_t a = 0; a < d; ++a) delta += (w[a] - v[a]) * (w[a] - v[a]);
      v = std::move(w);
      eig = norm;
      if (delta < 1e-24) break;
    }
    for (double x : v)
      if (x != 0) {
        if (x < 0)
          for (double& y : v) y = -y;
        break;
      }
    // deflate
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) cov[a][b] -= eig * v[a] * v[b];
    result.components.push_back(v);
    result.explained_variance.push_back(eig);
  }

  result.coords.assign(n, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < k; ++c)
      for (std::size_t j = 0; j < d; ++j)
        result.coords[i][c] += centered[i][j] * result.components[c][j];
  return result;
}

}  // namespace stepleak
