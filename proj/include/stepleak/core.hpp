#pragma once

// Cohort data model: per-15s step series, attributes, ingestion from CSV,
// validation, label derivation, and attribute correlation.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "stepleak/common.hpp"

namespace stepleak {

enum class Gender { male, female };
enum class Education { low, medium, high };

struct Attributes {
  Gender gender = Gender::male;
  int age = 0;
  Education education = Education::low;
};

/// One user's raw step counts for a full week, dense over all 40320 periods.
struct StepSeries {
  std::string user_id;
  std::vector<int> counts;  // length kPeriodsPerWeek

  std::vector<int> day(int d) const {
    return {counts.begin() + d * kPeriodsPerDay,
            counts.begin() + (d + 1) * kPeriodsPerDay};
  }
};

struct BinaryLabels {
  int age_bin = 0;                   // 1 = old (age >= threshold)
  int gender_bin = 0;                // 1 = female
  std::optional<int> edu_bin;        // 1 = high; absent for low education
};

struct UserRecord {
  StepSeries series;
  Attributes attrs;
  BinaryLabels labels;
};

struct CohortStats {
  std::size_t n_users = 0;
  int max_steps = 0;
  std::map<std::string, std::map<std::string, std::size_t>> class_counts;
};

struct Exclusion {
  std::string user_id;
  std::string reason;
};

struct Cohort {
  std::vector<UserRecord> records;
  CohortStats stats;
  std::vector<Exclusion> exclusions;
};

inline Gender parse_gender(const std::string& s) {
  if (s == "male") return Gender::male;
  if (s == "female") return Gender::female;
  throw DataError("invalid gender value: '" + s + "'");
}

inline Education parse_education(const std::string& s) {
  if (s == "low") return Education::low;
  if (s == "medium") return Education::medium;
  if (s == "high") return Education::high;
  throw DataError("invalid education value: '" + s + "'");
}

inline const char* to_string(Gender g) {
  return g == Gender::male ? "male" : "female";
}
inline const char* to_string(Education e) {
  switch (e) {
    case Education::low: return "low";
    case Education::medium: return "medium";
    default: return "high";
  }
}

/// Derives binary classification labels. Idempotent.
inline UserRecord derive_labels(UserRecord record, int age_threshold = 55) {
  record.labels.age_bin = record.attrs.age >= age_threshold ? 1 : 0;
  record.labels.gender_bin = record.attrs.gender == Gender::female ? 1 : 0;
  if (record.attrs.education == Education::low) {
    record.labels.edu_bin.reset();
  } else {
    record.labels.edu_bin = record.attrs.education == Education::high ? 1 : 0;
  }
  return record;
}

inline CohortStats compute_stats(const std::vector<UserRecord>& records) {
  CohortStats stats;
  stats.n_users = records.size();
  for (const auto& r : records) {
    for (int c : r.series.counts) stats.max_steps = std::max(stats.max_steps, c);
    stats.class_counts["gender"][to_string(r.attrs.gender)]++;
    stats.class_counts["education"][to_string(r.attrs.education)]++;
  }
  return stats;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

inline long parse_long(const std::string& s, const std::string& what,
                       std::size_t line_no) {
  std::size_t pos = 0;
  long v = 0;
  try {
    v = std::stol(s, &pos);
  } catch (const std::exception&) {
    throw DataError("line " + std::to_string(line_no) + ": bad " + what +
                    " '" + s + "'");
  }
  if (pos != s.size())
    throw DataError("line " + std::to_string(line_no) + ": bad " + what +
                    " '" + s + "'");
  return v;
}

}  // namespace detail

/// Loads a cohort from the steps/attributes CSV pair. Users with incomplete
/// step grids or missing attributes are excluded and reported, never
/// zero-filled. Duplicate rows and malformed input are hard errors.
inline Cohort load_cohort(const std::string& steps_file,
                          const std::string& attrs_file,
                          int age_threshold = 55) {
  std::ifstream steps(steps_file);
  if (!steps) throw DataError("cannot open steps file: " + steps_file);
  std::ifstream attrs(attrs_file);
  if (!attrs) throw DataError("cannot open attributes file: " + attrs_file);

  // steps CSV: user_id,day,period,steps — rows may arrive unordered.
  std::map<std::string, std::vector<int>> grids;
  std::map<std::string, std::size_t> filled;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(steps, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (!header_seen) {
      header_seen = true;
      if (line.rfind("user_id,", 0) == 0) continue;
    }
    auto f = detail::split_csv_line(line);
    if (f.size() != 4)
      throw DataError("steps line " + std::to_string(line_no) +
                      ": expected 4 fields, got " + std::to_string(f.size()));
    long day = detail::parse_long(f[1], "day", line_no);
    long period = detail::parse_long(f[2], "period", line_no);
    long count = detail::parse_long(f[3], "steps", line_no);
    if (day < 0 || day >= kDaysPerWeek)
      throw DataError("steps line " + std::to_string(line_no) +
                      ": day out of range");
    if (period < 0 || period >= kPeriodsPerDay)
      throw DataError("steps line " + std::to_string(line_no) +
                      ": period out of range");
    if (count < 0)
      throw DataError("steps line " + std::to_string(line_no) +
                      ": negative step count");
    auto& grid = grids[f[0]];
    if (grid.empty()) grid.assign(kPeriodsPerWeek, -1);
    int idx = static_cast<int>(day) * kPeriodsPerDay + static_cast<int>(period);
    if (grid[idx] >= 0)
      throw DataError("steps line " + std::to_string(line_no) +
                      ": duplicate (user,day,period) for '" + f[0] + "'");
    grid[idx] = static_cast<int>(count);
    filled[f[0]]++;
  }

  // attributes CSV: user_id,gender,age,education
  std::map<std::string, Attributes> attr_map;
  line_no = 0;
  header_seen = false;
  while (std::getline(attrs, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (!header_seen) {
      header_seen = true;
      if (line.rfind("user_id,", 0) == 0) continue;
    }
    auto f = detail::split_csv_line(line);
    if (f.size() != 4)
      throw DataError("attributes line " + std::to_string(line_no) +
                      ": expected 4 fields");
    if (attr_map.count(f[0]))
      throw DataError("attributes line " + std::to_string(line_no) +
                      ": duplicate user_id '" + f[0] + "'");
    Attributes a;
    try {
      a.gender = parse_gender(f[1]);
      a.education = parse_education(f[3]);
    } catch (const DataError& e) {
      throw DataError("attributes line " + std::to_string(line_no) + ": " +
                      e.what());
    }
    a.age = static_cast<int>(detail::parse_long(f[2], "age", line_no));
    if (a.age < 18 || a.age > 120)
      throw DataError("attributes line " + std::to_string(line_no) +
                      ": age out of [18,120]");
    attr_map[f[0]] = a;
  }

  Cohort cohort;
  for (auto& [uid, grid] : grids) {
    if (filled[uid] != static_cast<std::size_t>(kPeriodsPerWeek)) {
      cohort.exclusions.push_back({uid, "incomplete step grid"});
      continue;
    }
    auto it = attr_map.find(uid);
    if (it == attr_map.end()) {
      cohort.exclusions.push_back({uid, "missing attributes"});
      continue;
    }
    UserRecord rec;
    rec.series.user_id = uid;
    rec.series.counts = std::move(grid);
    rec.attrs = it->second;
    cohort.records.push_back(derive_labels(std::move(rec), age_threshold));
  }
  cohort.stats = compute_stats(cohort.records);
  return cohort;
}

/// Writes a cohort back to the steps/attributes CSV formats.
inline void write_cohort(const Cohort& cohort, const std::string& steps_file,
                         const std::string& attrs_file) {
  std::ofstream steps(steps_file);
  if (!steps) throw DataError("cannot write steps file: " + steps_file);
  std::ofstream attrs(attrs_file);
  if (!attrs) throw DataError("cannot write attributes file: " + attrs_file);
  steps << "user_id,day,period,steps\n";
  attrs << "user_id,gender,age,education\n";
  for (const auto& r : cohort.records) {
    for (int d = 0; d < kDaysPerWeek; ++d)
      for (int p = 0; p < kPeriodsPerDay; ++p)
        steps << r.series.user_id << ',' << d << ',' << p << ','
              << r.series.counts[d * kPeriodsPerDay + p] << '\n';
    attrs << r.series.user_id << ',' << to_string(r.attrs.gender) << ','
          << r.attrs.age << ',' << to_string(r.attrs.education) << '\n';
  }
}

/// Pearson correlation matrix over {age, education(0/1/2), gender(0/1)}.
/// A zero-variance column yields NaN coefficients off the diagonal.
struct CorrelationMatrix {
  std::array<std::string, 3> names = {"age", "education", "gender"};
  std::array<std::array<double, 3>, 3> coef{};
};

inline double pearson(const std::vector<double>& x,
                      const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

inline CorrelationMatrix attribute_correlation(const Cohort& cohort) {
  if (cohort.records.size() < 2)
    throw DataError("attribute_correlation needs at least 2 users");
  std::array<std::vector<double>, 3> cols;
  for (const auto& r : cohort.records) {
    cols[0].push_back(static_cast<double>(r.attrs.age));
    cols[1].push_back(static_cast<double>(static_cast<int>(r.attrs.education)));
    cols[2].push_back(r.attrs.gender == Gender::female ? 1.0 : 0.0);
  }
  CorrelationMatrix m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      m.coef[i][j] = i == j ? 1.0 : pearson(cols[i], cols[j]);
  return m;
}

}  // namespace stepleak
