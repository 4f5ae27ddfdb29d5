#pragma once

// CART decision trees (Gini impurity) and a bagged random forest with
// sqrt(d) feature subsampling. Deterministic under a fixed seed.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "stepleak/common.hpp"
#include "stepleak/nets.hpp"

namespace stepleak {

struct ForestOptions {
  int n_trees = 100;
  int max_depth = -1;  // -1 = unlimited
  int min_samples_split = 2;
  std::uint64_t seed = 0;
};

class DecisionTree {
 public:
  struct Node {
    int feature = -1;       // -1 marks a leaf
    double threshold = 0;   // go left if x[feature] <= threshold
    int left = -1, right = -1;
    double leaf_value = 0;  // positive-class fraction at the leaf
  };

  void fit(const std::vector<std::vector<double>>& X,
           const std::vector<int>& y, const std::vector<std::size_t>& sample,
           int max_depth, int min_samples_split, int n_sub_features,
           Rng& rng) {
    nodes_.clear();
    n_features_ = X.empty() ? 0 : static_cast<int>(X.front().size());
    build(X, y, sample, 0, max_depth, min_samples_split, n_sub_features, rng);
  }

  double predict(std::span<const double> x) const {
    int n = 0;
    while (nodes_[n].feature >= 0)
      n = x[nodes_[n].feature] <= nodes_[n].threshold ? nodes_[n].left
                                                      : nodes_[n].right;
    return nodes_[n].leaf_value;
  }

  const std::vector<Node>& nodes() const { return nodes_; }
  std::vector<Node>& nodes() { return nodes_; }

 private:
  int build(const std::vector<std::vector<double>>& X,
            const std::vector<int>& y, const std::vector<std::size_t>& idx,
            int depth, int max_depth, int min_samples_split,
            int n_sub_features, Rng& rng) {
    const int node_id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();

    std::size_t n_pos = 0;
    for (std::size_t i : idx) n_pos += y[i];
    const double frac = static_cast<double>(n_pos) / idx.size();
    nodes_[node_id].leaf_value = frac;
    const bool pure = n_pos == 0 || n_pos == idx.size();
    if (pure || idx.size() < static_cast<std::size_t>(min_samples_split) ||
        (max_depth >= 0 && depth >= max_depth))
      return node_id;

    // sample candidate features without replacement
    std::vector<int> feats(n_features_);
    std::iota(feats.begin(), feats.end(), 0);
    std::shuffle(feats.begin(), feats.end(), rng);
    feats.resize(std::min<std::size_t>(n_sub_features, feats.size()));
    std::sort(feats.begin(), feats.end());  // deterministic scan order

    int best_feat = -1;
    double best_thresh = 0, best_gini = gini(n_pos, idx.size());
    std::vector<std::pair<double, int>> vals(idx.size());
    for (int f : feats) {
      for (std::size_t k = 0; k < idx.size(); ++k)
        vals[k] = {X[idx[k]][f], y[idx[k]]};
      std::sort(vals.begin(), vals.end());
      std::size_t left_n = 0, left_pos = 0;
      for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
        ++left_n;
        left_pos += vals[k].second;
        if (vals[k].first == vals[k + 1].first) continue;
        const std::size_t right_n = vals.size() - left_n;
        const std::size_t right_pos = n_pos - left_pos;
        const double g =
            (left_n * gini(left_pos, left_n) + right_n * gini(right_pos, right_n)) /
            static_cast<double>(vals.size());
        if (g < best_gini - 1e-15) {
          best_gini = g;
          best_feat = f;
          best_thresh = (vals[k].first + vals[k + 1].first) / 2.0;
        }
      }
    }
    if (best_feat < 0) return node_id;

    std::vector<std::size_t> left_idx, right_idx;
    for (std::size_t i : idx)
      (X[i][best_feat] <= best_thresh ? left_idx : right_idx).push_back(i);
    if (left_idx.empty() || right_idx.empty()) return node_id;

    nodes_[node_id].feature = best_feat;
    nodes_[node_id].threshold = best_thresh;
    const int l = build(X, y, left_idx, depth + 1, max_depth,
                        min_samples_split, n_sub_features, rng);
    const int r = build(X, y, right_idx, depth + 1, max_depth,
                        min_samples_split, n_sub_features, rng);
    nodes_[node_id].left = l;
    nodes_[node_id].right = r;
    return node_id;
  }

  static double gini(std::size_t n_pos, std::size_t n) {
    if (n == 0) return 0;
    const double p = static_cast<double>(n_pos) / n;
    return 2.0 * p * (1.0 - p);
  }

  int n_features_ = 0;
  std::vector<Node> nodes_;
};

/// Bagged forest; predict() is the mean positive-class leaf fraction over
/// trees, so it is invariant to tree order.
class RandomForest {
 public:
  RandomForest() = default;
  explicit RandomForest(ForestOptions opt) : opt_(opt) {}

  void fit(const std::vector<std::vector<double>>& X,
           const std::vector<int>& y) {
    if (X.empty()) throw DataError("RandomForest: empty training set");
    bool has0 = false, has1 = false;
    for (int v : y) (v ? has1 : has0) = true;
    if (!has0 || !has1)
      throw DataError("RandomForest: training labels are single-class");
    const int d = static_cast<int>(X.front().size());
    const int n_sub = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(d))));
    trees_.assign(opt_.n_trees, {});
    for (int t = 0; t < opt_.n_trees; ++t) {
      Rng rng(mix_seed(opt_.seed, 0x7472ee00ULL + t));
      std::uniform_int_distribution<std::size_t> pick(0, X.size() - 1);
      std::vector<std::size_t> bootstrap(X.size());
      for (auto& i : bootstrap) i = pick(rng);
      trees_[t].fit(X, y, bootstrap, opt_.max_depth, opt_.min_samples_split,
                    n_sub, rng);
    }
  }

  double predict(std::span<const double> x) const {
    if (trees_.empty()) throw DataError("RandomForest: not fitted");
    double acc = 0;
    for (const auto& t : trees_) acc += t.predict(x);
    return acc / static_cast<double>(trees_.size());
  }

  const std::vector<DecisionTree>& trees() const { return trees_; }
  std::vector<DecisionTree>& trees() { return trees_; }
  const ForestOptions& options() const { return opt_; }

 private:
  ForestOptions opt_;
  std::vector<DecisionTree> trees_;
};

/// Linear SVM trained by hinge-loss subgradient descent with L2 penalty.
/// Scores are a sigmoid squashing of the margin, used for ranking only.
class LinearSvm {
 public:
  LinearSvm() = default;

  void fit(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
           const TrainOptions& opt, double l2 = 1e-4) {
    if (X.empty()) throw DataError("LinearSvm: empty training set");
    const std::size_t d = X.front().size();
    w_.assign(d, 0.0);
    b_ = 0.0;
    Rng rng(mix_seed(opt.seed, 0x73766d));
    std::vector<std::size_t> order(X.size());
    std::iota(order.begin(), order.end(), 0);
    for (int e = 0; e < opt.epochs; ++e) {
      std::shuffle(order.begin(), order.end(), rng);
      const double lr = opt.learning_rate / (1.0 + 0.01 * e);
      for (std::size_t i : order) {
        const double t = y[i] ? 1.0 : -1.0;
        double m = b_;
        for (std::size_t j = 0; j < d; ++j) m += w_[j] * X[i][j];
        for (std::size_t j = 0; j < d; ++j) w_[j] -= lr * l2 * w_[j];
        if (t * m < 1.0) {
          for (std::size_t j = 0; j < d; ++j) w_[j] += lr * t * X[i][j];
          b_ += lr * t;
        }
      }
    }
  }

  double margin(std::span<const double> x) const {
    if (x.size() != w_.size()) throw DataError("LinearSvm: dimension mismatch");
    double m = b_;
    for (std::size_t j = 0; j < w_.size(); ++j) m += w_[j] * x[j];
    return m;
  }

  double score(std::span<const double> x) const {
    return 1.0 / (1.0 + std::exp(-margin(x)));
  }

  std::vector<double>& weights() { return w_; }
  const std::vector<double>& weights() const { return w_; }
  double& bias() { return b_; }
  double bias() const { return b_; }

 private:
  std::vector<double> w_;
  double b_ = 0;
};

}  // namespace stepleak
