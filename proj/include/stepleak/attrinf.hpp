#pragma once

// Attribute-inference attack: task construction, balanced grouped splits,
// feature-grid evaluation with cross-validation, and the action-score
// aggregation rule.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stepleak/core.hpp"
#include "stepleak/eval.hpp"
#include "stepleak/features.hpp"
#include "stepleak/learners.hpp"

namespace stepleak {

enum class AggregateMethod { mean, majority };

struct TaskSpec {
  std::string attribute;  // gender | age | education
  std::vector<FeatureConfig> configs;
  std::vector<ModelSpec> classifiers;
  double split_fraction = 0.8;
  int cv_folds = 5;
  std::uint64_t seed = 0;
  AggregateMethod action_aggregation = AggregateMethod::mean;
  int action_bucket = 2;  // bucket size for distributional action features
};

/// Per-user partition assignment; all of a user's vectors share a partition.
struct SplitPlan {
  std::map<std::string, int> partition_of_user;  // 0 = train, 1 = test
};

inline std::optional<int> task_label(const UserRecord& r,
                                     const std::string& attribute) {
  if (attribute == "gender") return r.labels.gender_bin;
  if (attribute == "age") return r.labels.age_bin;
  if (attribute == "education") return r.labels.edu_bin;
  throw DataError("unknown attribute '" + attribute + "'");
}

/// Stratified 80/20-style split: per class, a seeded random fraction of users
/// goes to training; all of a user's vectors follow the user.
inline SplitPlan make_split(const Cohort& cohort, const std::string& attribute,
                            double fraction, std::uint64_t seed) {
  std::map<int, std::vector<std::string>> by_class;
  for (const auto& r : cohort.records)
    if (auto lbl = task_label(r, attribute)) by_class[*lbl].push_back(r.series.user_id);
  SplitPlan plan;
  Rng rng(seed);
  for (auto& [cls, users] : by_class) {
    if (users.size() < 2)
      throw DataError("make_split: class " + std::to_string(cls) +
                      " has fewer than 2 users");
    std::sort(users.begin(), users.end());
    std::shuffle(users.begin(), users.end(), rng);
    const auto n_train = static_cast<std::size_t>(
        std::lround(fraction * static_cast<double>(users.size())));
    for (std::size_t i = 0; i < users.size(); ++i)
      plan.partition_of_user[users[i]] = i < n_train ? 0 : 1;
  }
  return plan;
}

/// One feature row bound to its owner and label.
struct TaskItem {
  std::string user;
  int label = 0;
  std::vector<double> values;
};

/// Extracts the per-item feature rows for one grid cell. week/day scopes give
/// 1 or 7 rows per user; actions scope gives one row per action.
inline std::vector<TaskItem> extract_task_items(const Cohort& cohort,
                                                const FeatureConfig& config,
                                                const std::string& attribute,
                                                int action_bucket = 2) {
  config.validate();
  const int max_steps = cohort.stats.max_steps;
  std::vector<TaskItem> items;

  auto transform = [&](std::span<const int> raw) -> std::vector<double> {
    switch (config.method) {
      case Method::raw:
        return std::vector<double>(raw.begin(), raw.end());
      case Method::statistical:
        return extract_statistical(raw, config.window, config.stats);
      case Method::distributional:
        return extract_distributional(raw, config.window, config.bucket,
                                      max_steps);
    }
    return {};
  };

  for (const auto& r : cohort.records) {
    const auto lbl = task_label(r, attribute);
    if (!lbl) continue;
    if (config.scope == Scope::week) {
      items.push_back({r.series.user_id, *lbl, transform(r.series.counts)});
    } else if (config.scope == Scope::day) {
      for (int d = 0; d < kDaysPerWeek; ++d) {
        auto day = r.series.day(d);
        items.push_back({r.series.user_id, *lbl, transform(day)});
      }
    } else {
      ActionMode mode = ActionMode::raw;
      if (config.method == Method::statistical) mode = ActionMode::statistical_all;
      if (config.method == Method::distributional) mode = ActionMode::distributional;
      for (const auto& a : segment_actions(r.series.counts, r.series.user_id))
        items.push_back({r.series.user_id, *lbl,
                         action_features(a, mode, action_bucket, max_steps)
                             .values});
    }
  }

  if (config.normalization == Normalization::vector_wise)
    for (auto& it : items) it.values = normalize_vector_wise(std::move(it.values));
  else if (config.normalization == Normalization::prob_dist)
    for (auto& it : items) it.values = normalize_prob_dist(std::move(it.values));
  // feature_wise is fitted per training fold inside run_task
  return items;
}

/// Keeps the most-sure half (by |score - 0.5|) and combines the rest.
/// Ties in sureness are resolved by score value so the result is invariant
/// to permutation of the input list.
inline double aggregate_actions(std::vector<double> scores,
                                AggregateMethod method) {
  if (scores.empty())
    throw DataError("aggregate_actions: empty score list");
  for (double s : scores)
    if (s < 0.0 || s > 1.0)
      throw DataError("aggregate_actions: score outside [0,1]");
  std::sort(scores.begin(), scores.end(), [](double a, double b) {
    const double sa = std::abs(a - 0.5), sb = std::abs(b - 0.5);
    if (sa != sb) return sa > sb;
    return a > b;
  });
  const std::size_t keep = (scores.size() + 1) / 2;
  scores.resize(keep);
  if (method == AggregateMethod::mean) {
    double acc = 0;
    for (double s : scores) acc += s;
    return acc / static_cast<double>(keep);
  }
  double votes = 0;
  for (double s : scores) votes += s > 0.5 ? 1.0 : (s == 0.5 ? 0.5 : 0.0);
  return votes / static_cast<double>(keep);
}

struct TaskResult {
  std::string attribute;
  FeatureConfig config;
  ModelSpec classifier;
  std::vector<double> fold_aucs;
  double mean_auc = 0;
  double std_auc = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::vector<std::string> flags;
};

/// Evaluates one (config, classifier) cell with grouped stratified k-fold CV.
/// Normalization maxima are fitted on training folds only. Actions scope
/// aggregates per-action scores to one score per user before the AUC.
inline TaskResult run_task_cell(const Cohort& cohort, const TaskSpec& task,
                                const FeatureConfig& config,
                                const ModelSpec& classifier,
                                std::uint64_t cell_seed) {
  TaskResult result;
  result.attribute = task.attribute;
  result.config = config;
  result.classifier = classifier;

  auto items =
      extract_task_items(cohort, config, task.attribute, task.action_bucket);
  if (items.empty()) throw DataError("run_task: no eligible items");

  std::vector<int> labels;
  std::vector<std::string> groups;
  for (const auto& it : items) {
    labels.push_back(it.label);
    groups.push_back(it.user);
  }
  const auto folds = cross_validate(labels, task.cv_folds, groups, cell_seed);

  for (int f = 0; f < task.cv_folds; ++f) {
    std::vector<std::vector<double>> x_train, x_test;
    std::vector<int> y_train;
    std::vector<std::size_t> test_idx;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (folds[i] == f) {
        x_test.push_back(items[i].values);
        test_idx.push_back(i);
      } else {
        x_train.push_back(items[i].values);
        y_train.push_back(items[i].label);
      }
    }
    auto degenerate = [](const std::vector<int>& ys) {
      bool h0 = false, h1 = false;
      for (int v : ys) (v ? h1 : h0) = true;
      return !h0 || !h1;
    };
    std::vector<int> y_test;
    for (std::size_t i : test_idx) y_test.push_back(items[i].label);
    if (x_test.empty() || degenerate(y_train) || degenerate(y_test)) {
      result.flags.push_back("fold " + std::to_string(f) +
                             " skipped: single-class partition");
      continue;
    }

    if (config.normalization == Normalization::feature_wise) {
      const auto norm = FeatureWiseNorm::fit(x_train);
      for (auto& v : x_train) v = norm.apply(std::move(v));
      for (auto& v : x_test) v = norm.apply(std::move(v));
    }

    ModelSpec spec = classifier;
    spec.train.seed = mix_seed(cell_seed, 0xf01d0000ULL + f);
    spec.forest.seed = spec.train.seed;
    const auto model = fit(spec, x_train, y_train);

    std::vector<ScoredSample> scored;
    if (config.scope == Scope::actions) {
      std::map<std::string, std::pair<std::vector<double>, int>> per_user;
      for (std::size_t k = 0; k < test_idx.size(); ++k) {
        const auto& it = items[test_idx[k]];
        auto& entry = per_user[it.user];
        entry.first.push_back(model.predict_score(x_test[k]));
        entry.second = it.label;
      }
      for (auto& [user, entry] : per_user)
        scored.push_back({aggregate_actions(std::move(entry.first),
                                            task.action_aggregation),
                          entry.second});
    } else {
      for (std::size_t k = 0; k < test_idx.size(); ++k)
        scored.push_back(
            {model.predict_score(x_test[k]), items[test_idx[k]].label});
    }
    result.fold_aucs.push_back(auc(scored));
    result.n_train = x_train.size();
    result.n_test = x_test.size();
  }

  std::tie(result.mean_auc, result.std_auc) = detail::mean_std(result.fold_aucs);
  return result;
}

/// Full grid sweep; results are ordered by (config index, classifier index)
/// so output is independent of execution order.
inline std::vector<TaskResult> run_task(const Cohort& cohort,
                                        const TaskSpec& task) {
  std::vector<TaskResult> results;
  for (std::size_t c = 0; c < task.configs.size(); ++c)
    for (std::size_t m = 0; m < task.classifiers.size(); ++m)
      results.push_back(run_task_cell(
          cohort, task, task.configs[c], task.classifiers[m],
          mix_seed(task.seed, 0xce110000ULL + c * 1000 + m)));
  return results;
}

}  // namespace stepleak
