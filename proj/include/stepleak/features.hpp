#pragma once

// Windowed feature extraction (statistical, distributional), action
// segmentation, and the three normalization modes.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stepleak/common.hpp"

namespace stepleak {

enum class Scope { week, day, actions };
enum class Method { raw, statistical, distributional };
enum class Normalization { none, feature_wise, vector_wise, prob_dist };

enum class Stat { sum, max, mean, median, std_dev };
// Fixed statistic ordering; vectors built with any subset always follow it.
constexpr std::array<Stat, 5> kStatOrder = {Stat::sum, Stat::max, Stat::mean,
                                            Stat::median, Stat::std_dev};

struct FeatureConfig {
  Scope scope = Scope::day;
  Method method = Method::raw;
  std::vector<Stat> stats;  // subset of kStatOrder, in kStatOrder order
  int window = 1;
  int bucket = 1;
  Normalization normalization = Normalization::none;

  void validate() const {
    if (method == Method::statistical && stats.empty())
      throw DataError("statistical method requires a non-empty stat set");
    if (method == Method::distributional && (bucket < 1 || window < 1))
      throw DataError("distributional method requires window >= 1, bucket >= 1");
    if (method == Method::statistical && window < 1)
      throw DataError("statistical method requires window >= 1");
  }
};

struct FeatureVector {
  std::vector<double> values;
  std::string owner;
  std::optional<int> day;
  // Set for action-derived vectors only.
  std::optional<int> start_period;
  std::optional<int> length;
};

/// A maximal walking episode: no internal rest of 8+ zero periods, trimmed of
/// boundary zeros.
struct Action {
  std::string owner;
  int start_period = 0;  // absolute index within the week
  std::vector<int> payload;
};

namespace detail {

inline double stat_value(Stat s, std::span<const int> v) {
  const double n = static_cast<double>(v.size());
  switch (s) {
    case Stat::sum: {
      double acc = 0;
      for (int x : v) acc += x;
      return acc;
    }
    case Stat::max:
      return static_cast<double>(*std::max_element(v.begin(), v.end()));
    case Stat::mean: {
      double acc = 0;
      for (int x : v) acc += x;
      return acc / n;
    }
    case Stat::median: {
      std::vector<int> sorted(v.begin(), v.end());
      std::sort(sorted.begin(), sorted.end());
      const std::size_t m = sorted.size() / 2;
      if (sorted.size() % 2 == 1) return sorted[m];
      return (sorted[m - 1] + sorted[m]) / 2.0;
    }
    case Stat::std_dev: {
      // population convention; length-1 window yields 0
      double mean = 0;
      for (int x : v) mean += x;
      mean /= n;
      double ss = 0;
      for (int x : v) ss += (x - mean) * (x - mean);
      return std::sqrt(ss / n);
    }
  }
  return 0;
}

}  // namespace detail

/// Splits `raw` into non-overlapping windows of size w (last may be shorter)
/// and emits the chosen statistics per window in kStatOrder.
inline std::vector<double> extract_statistical(std::span<const int> raw, int w,
                                               const std::vector<Stat>& stats) {
  if (raw.empty()) throw DataError("extract_statistical: empty input");
  if (w < 1) throw DataError("extract_statistical: window must be >= 1");
  if (stats.empty()) throw DataError("extract_statistical: empty stat set");
  std::vector<double> out;
  out.reserve(stats.size() * ((raw.size() + w - 1) / w));
  for (std::size_t i = 0; i < raw.size(); i += w) {
    auto win = raw.subspan(i, std::min<std::size_t>(w, raw.size() - i));
    for (Stat s : kStatOrder)
      if (std::find(stats.begin(), stats.end(), s) != stats.end())
        out.push_back(detail::stat_value(s, win));
  }
  return out;
}

inline int distributional_buckets(int max_steps, int b) {
  return 1 + (max_steps + b - 1) / b;
}

/// Per window, a histogram over buckets {0}, [1,b], [b+1,2b], ... up to
/// max_steps, concatenated across windows.
inline std::vector<double> extract_distributional(std::span<const int> raw,
                                                  int w, int b, int max_steps) {
  if (raw.empty()) throw DataError("extract_distributional: empty input");
  if (w < 1 || b < 1)
    throw DataError("extract_distributional: window and bucket must be >= 1");
  const int n_buckets = distributional_buckets(max_steps, b);
  std::vector<double> out;
  out.reserve(n_buckets * ((raw.size() + w - 1) / w));
  for (std::size_t i = 0; i < raw.size(); i += w) {
    auto win = raw.subspan(i, std::min<std::size_t>(w, raw.size() - i));
    std::vector<double> hist(n_buckets, 0.0);
    for (int x : win) {
      if (x > max_steps)
        throw DataError("step count " + std::to_string(x) +
                        " exceeds cohort max_steps " +
                        std::to_string(max_steps) + " (stale CohortStats?)");
      hist[x == 0 ? 0 : 1 + (x - 1) / b] += 1.0;
    }
    out.insert(out.end(), hist.begin(), hist.end());
  }
  return out;
}

/// Splits a week at every maximal run of >= 8 consecutive zero periods and
/// trims boundary zeros of each segment.
inline std::vector<Action> segment_actions(std::span<const int> week,
                                           const std::string& owner = "") {
  constexpr int kRestRun = 8;  // 2 minutes of 15s periods
  std::vector<Action> actions;
  std::size_t seg_start = 0;
  std::size_t i = 0;
  auto flush = [&](std::size_t seg_end) {  // [seg_start, seg_end)
    std::size_t lo = seg_start, hi = seg_end;
    while (lo < hi && week[lo] == 0) ++lo;
    while (hi > lo && week[hi - 1] == 0) --hi;
    if (lo < hi)
      actions.push_back({owner, static_cast<int>(lo),
                         std::vector<int>(week.begin() + lo, week.begin() + hi)});
  };
  while (i < week.size()) {
    if (week[i] == 0) {
      std::size_t run_start = i;
      while (i < week.size() && week[i] == 0) ++i;
      if (i - run_start >= kRestRun) {
        flush(run_start);
        seg_start = i;
      }
    } else {
      ++i;
    }
  }
  flush(week.size());
  return actions;
}

enum class ActionMode { raw, statistical_all, distributional };

/// Feature vector for one action: [length, start_period] ++ payload transform.
inline FeatureVector action_features(const Action& action, ActionMode mode,
                                     int b = 1, int max_steps = 0) {
  FeatureVector fv;
  fv.owner = action.owner;
  fv.start_period = action.start_period;
  fv.length = static_cast<int>(action.payload.size());
  fv.values = {static_cast<double>(action.payload.size()),
               static_cast<double>(action.start_period)};
  const int w = static_cast<int>(action.payload.size());
  std::vector<double> body;
  switch (mode) {
    case ActionMode::raw:
      body.assign(action.payload.begin(), action.payload.end());
      break;
    case ActionMode::statistical_all:
      body = extract_statistical(
          action.payload, w,
          {Stat::sum, Stat::max, Stat::mean, Stat::median, Stat::std_dev});
      break;
    case ActionMode::distributional:
      body = extract_distributional(action.payload, w, b, max_steps);
      break;
  }
  fv.values.insert(fv.values.end(), body.begin(), body.end());
  return fv;
}

/// Column maxima fitted on a training partition, applied to both partitions.
struct FeatureWiseNorm {
  std::vector<double> column_max;

  static FeatureWiseNorm fit(const std::vector<std::vector<double>>& train) {
    if (train.empty()) throw DataError("feature_wise fit: empty training set");
    FeatureWiseNorm n;
    n.column_max.assign(train.front().size(), 0.0);
    for (const auto& row : train) {
      if (row.size() != n.column_max.size())
        throw DataError("feature_wise fit: unequal vector lengths");
      for (std::size_t j = 0; j < row.size(); ++j)
        n.column_max[j] = std::max(n.column_max[j], row[j]);
    }
    return n;
  }

  // Zero column max leaves the column untouched. Test-time values may
  // exceed 1; they are not clamped.
  std::vector<double> apply(std::vector<double> v) const {
    if (v.size() != column_max.size())
      throw DataError("feature_wise apply: length mismatch");
    for (std::size_t j = 0; j < v.size(); ++j)
      if (column_max[j] != 0.0) v[j] /= column_max[j];
    return v;
  }
};

inline std::vector<double> normalize_vector_wise(std::vector<double> v) {
  double m = 0;
  for (double x : v) m = std::max(m, x);
  if (m != 0.0)
    for (double& x : v) x /= m;
  return v;
}

inline std::vector<double> normalize_prob_dist(std::vector<double> v) {
  double s = 0;
  for (double x : v) s += x;
  if (s != 0.0)
    for (double& x : v) x /= s;
  return v;
}

inline std::size_t statistical_length(std::size_t n, int w,
                                      const std::vector<Stat>& stats) {
  return stats.size() * ((n + w - 1) / w);
}

inline std::size_t distributional_length(std::size_t n, int w, int b,
                                         int max_steps) {
  return static_cast<std::size_t>(distributional_buckets(max_steps, b)) *
         ((n + w - 1) / w);
}

}  // namespace stepleak
