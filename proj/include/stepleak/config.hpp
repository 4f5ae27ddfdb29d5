#pragma once

// Declarative experiment configuration: one JSON file drives synth/feature/
// attack runs. Validation collects every diagnostic instead of failing fast.

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "stepleak/attrinf.hpp"
#include "stepleak/core.hpp"
#include "stepleak/features.hpp"
#include "stepleak/learners.hpp"
#include "stepleak/linkage.hpp"
#include "stepleak/synth.hpp"

namespace stepleak {

using nlohmann::json;

// --- enum <-> string ---

inline Scope parse_scope(const std::string& s) {
  if (s == "week") return Scope::week;
  if (s == "day") return Scope::day;
  if (s == "actions") return Scope::actions;
  throw DataError("invalid scope '" + s + "'");
}
inline const char* to_string(Scope s) {
  switch (s) {
    case Scope::week: return "week";
    case Scope::day: return "day";
    default: return "actions";
  }
}

inline Method parse_method(const std::string& s) {
  if (s == "raw") return Method::raw;
  if (s == "statistical") return Method::statistical;
  if (s == "distributional") return Method::distributional;
  throw DataError("invalid method '" + s + "'");
}
inline const char* to_string(Method m) {
  switch (m) {
    case Method::raw: return "raw";
    case Method::statistical: return "statistical";
    default: return "distributional";
  }
}

inline Normalization parse_normalization(const std::string& s) {
  if (s == "none") return Normalization::none;
  if (s == "feature_wise") return Normalization::feature_wise;
  if (s == "vector_wise") return Normalization::vector_wise;
  if (s == "prob_dist") return Normalization::prob_dist;
  throw DataError("invalid normalization '" + s + "'");
}
inline const char* to_string(Normalization n) {
  switch (n) {
    case Normalization::none: return "none";
    case Normalization::feature_wise: return "feature_wise";
    case Normalization::vector_wise: return "vector_wise";
    default: return "prob_dist";
  }
}

inline Stat parse_stat(const std::string& s) {
  if (s == "sum") return Stat::sum;
  if (s == "max") return Stat::max;
  if (s == "mean") return Stat::mean;
  if (s == "median") return Stat::median;
  if (s == "std") return Stat::std_dev;
  throw DataError("invalid statistic '" + s + "'");
}
inline const char* to_string(Stat s) {
  switch (s) {
    case Stat::sum: return "sum";
    case Stat::max: return "max";
    case Stat::mean: return "mean";
    case Stat::median: return "median";
    default: return "std";
  }
}

inline json feature_config_to_json(const FeatureConfig& c) {
  json j;
  j["scope"] = to_string(c.scope);
  j["method"] = to_string(c.method);
  if (c.method == Method::statistical) {
    json stats = json::array();
    for (Stat s : c.stats) stats.push_back(to_string(s));
    j["stats"] = stats;
  }
  j["window"] = c.window;
  if (c.method == Method::distributional) j["bucket"] = c.bucket;
  j["normalization"] = to_string(c.normalization);
  return j;
}

/// Named presets covering the best-performing grid cells.
inline std::optional<FeatureConfig> feature_preset(const std::string& name) {
  FeatureConfig c;
  if (name == "stat_max_median_w720") {
    c.scope = Scope::day;
    c.method = Method::statistical;
    c.stats = {Stat::max, Stat::median};
    c.window = 720;
    return c;
  }
  if (name == "stat_max_w720") {
    c.scope = Scope::day;
    c.method = Method::statistical;
    c.stats = {Stat::max};
    c.window = 720;
    return c;
  }
  if (name == "dist_b2_w240") {
    c.scope = Scope::day;
    c.method = Method::distributional;
    c.bucket = 2;
    c.window = 240;
    return c;
  }
  if (name == "dist_b2_w720") {
    c.scope = Scope::day;
    c.method = Method::distributional;
    c.bucket = 2;
    c.window = 720;
    return c;
  }
  if (name == "raw_day") {
    c.scope = Scope::day;
    c.method = Method::raw;
    return c;
  }
  return std::nullopt;
}

struct Diagnostics {
  std::vector<std::string> errors;
  bool ok() const { return errors.empty(); }
  void add(const std::string& field, const std::string& msg) {
    errors.push_back(field + ": " + msg);
  }
};

inline FeatureConfig parse_feature_config(const json& j, const std::string& where,
                                          Diagnostics& diag) {
  FeatureConfig c;
  if (j.is_string()) {
    if (auto p = feature_preset(j.get<std::string>())) return *p;
    diag.add(where, "unknown feature preset '" + j.get<std::string>() + "'");
    return c;
  }
  if (!j.is_object()) {
    diag.add(where, "must be an object or preset name");
    return c;
  }
  try {
    if (j.contains("scope")) c.scope = parse_scope(j.at("scope").get<std::string>());
    if (j.contains("method")) c.method = parse_method(j.at("method").get<std::string>());
    if (j.contains("stats"))
      for (const auto& s : j.at("stats")) c.stats.push_back(parse_stat(s.get<std::string>()));
    if (j.contains("window")) c.window = j.at("window").get<int>();
    if (j.contains("bucket")) c.bucket = j.at("bucket").get<int>();
    if (j.contains("normalization"))
      c.normalization = parse_normalization(j.at("normalization").get<std::string>());
  } catch (const std::exception& e) {
    diag.add(where, e.what());
    return c;
  }
  if (c.window < 1) diag.add(where + ".window", "must be >= 1");
  if (c.bucket < 1) diag.add(where + ".bucket", "must be >= 1");
  if (c.method == Method::statistical && c.stats.empty())
    diag.add(where + ".stats", "statistical method requires a non-empty stat set");
  return c;
}

inline ModelSpec parse_model_spec(const json& j, const std::string& where,
                                  Diagnostics& diag) {
  ModelSpec m;
  if (!j.is_object()) {
    diag.add(where, "must be an object");
    return m;
  }
  try {
    if (j.contains("kind")) {
      const auto kind = j.at("kind").get<std::string>();
      m.kind = parse_model_kind(kind);
      if (kind == "mlp1") m.mlp_shape = 1;
      if (kind == "mlp2") m.mlp_shape = 2;
      if (kind == "mlp3") m.mlp_shape = 3;
    }
    if (j.contains("mlp_shape")) m.mlp_shape = j.at("mlp_shape").get<int>();
    if (j.contains("dropout")) m.dropout = j.at("dropout").get<double>();
    if (j.contains("learning_rate"))
      m.train.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("epochs")) m.train.epochs = j.at("epochs").get<int>();
    if (j.contains("batch_size")) m.train.batch_size = j.at("batch_size").get<int>();
    if (j.contains("n_trees")) m.forest.n_trees = j.at("n_trees").get<int>();
    if (j.contains("max_depth")) m.forest.max_depth = j.at("max_depth").get<int>();
    m.validate();
  } catch (const std::exception& e) {
    diag.add(where, e.what());
  }
  return m;
}

struct InferSection {
  std::vector<std::string> attributes;
  std::vector<FeatureConfig> configs;
  std::vector<ModelSpec> classifiers;
  int cv_folds = 5;
  AggregateMethod aggregation = AggregateMethod::mean;
};

struct LinkSection {
  std::vector<FeatureConfig> configs;
  std::vector<LinkAttackKind> attacks;
  int cv_folds = 5;
  ModelSpec siamese;
  ForestOptions forest;
  bool dump_scores = false;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  std::optional<std::pair<std::string, std::string>> data;  // steps, attrs
  std::optional<SynthConfig> synth;
  std::vector<FeatureConfig> feature_exports;
  std::optional<InferSection> infer;
  std::optional<LinkSection> link;
  json raw;  // canonical parsed config, for hashing/echo
};

inline SynthConfig parse_synth_section(const json& j, Diagnostics& diag) {
  SynthConfig s;
  try {
    if (j.contains("n_users")) s.n_users = j.at("n_users").get<int>();
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("age_min")) s.age_min = j.at("age_min").get<int>();
    if (j.contains("age_max")) s.age_max = j.at("age_max").get<int>();
    if (j.contains("age_threshold")) s.age_threshold = j.at("age_threshold").get<int>();
    if (j.contains("cap")) s.cap = j.at("cap").get<int>();
    if (j.contains("block_rates")) {
      const auto v = j.at("block_rates").get<std::vector<double>>();
      if (v.size() != 3) throw DataError("block_rates must have 3 entries");
      std::copy(v.begin(), v.end(), s.block_rates.begin());
    }
    if (j.contains("age_effect")) s.age_effect = j.at("age_effect").get<double>();
    if (j.contains("gender_effect")) s.gender_effect = j.at("gender_effect").get<double>();
    if (j.contains("edu_coupling")) s.edu_coupling = j.at("edu_coupling").get<double>();
    if (j.contains("fingerprint_sigma"))
      s.fingerprint_sigma = j.at("fingerprint_sigma").get<double>();
    if (j.contains("episodes")) s.episodes = j.at("episodes").get<bool>();
    if (j.contains("walk_mean_periods"))
      s.walk_mean_periods = j.at("walk_mean_periods").get<double>();
    if (j.contains("rest_mean_periods"))
      s.rest_mean_periods = j.at("rest_mean_periods").get<double>();
    s.validate();
  } catch (const std::exception& e) {
    diag.add("synth", e.what());
  }
  return s;
}

/// Parses and validates; every schema violation is reported, not just the
/// first one.
inline ExperimentConfig parse_experiment_config(const json& j,
                                                Diagnostics& diag) {
  ExperimentConfig cfg;
  cfg.raw = j;
  if (!j.is_object()) {
    diag.add("config", "top level must be a JSON object");
    return cfg;
  }
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("out")) cfg.out_dir = j.at("out").get<std::string>();

  const bool has_data = j.contains("data");
  const bool has_synth = j.contains("synth");
  if (!has_data && !has_synth)
    diag.add("config", "no data source: provide a 'data' or 'synth' section");
  if (has_data && has_synth)
    diag.add("config", "exactly one data source allowed, found both 'data' and 'synth'");
  if (has_data) {
    const auto& d = j.at("data");
    if (!d.contains("steps") || !d.contains("attrs"))
      diag.add("data", "requires 'steps' and 'attrs' file paths");
    else
      cfg.data = {d.at("steps").get<std::string>(), d.at("attrs").get<std::string>()};
  }
  if (has_synth) cfg.synth = parse_synth_section(j.at("synth"), diag);

  if (j.contains("features")) {
    const auto& f = j.at("features");
    if (f.contains("configs")) {
      int i = 0;
      for (const auto& c : f.at("configs"))
        cfg.feature_exports.push_back(
            parse_feature_config(c, "features.configs[" + std::to_string(i++) + "]", diag));
    }
  }

  if (j.contains("infer")) {
    InferSection s;
    const auto& inf = j.at("infer");
    if (inf.contains("attributes"))
      s.attributes = inf.at("attributes").get<std::vector<std::string>>();
    for (const auto& a : s.attributes)
      if (a != "age" && a != "gender" && a != "education")
        diag.add("infer.attributes", "unknown attribute '" + a + "'");
    if (s.attributes.empty()) diag.add("infer.attributes", "must not be empty");
    int i = 0;
    if (inf.contains("configs"))
      for (const auto& c : inf.at("configs"))
        s.configs.push_back(
            parse_feature_config(c, "infer.configs[" + std::to_string(i++) + "]", diag));
    if (s.configs.empty()) diag.add("infer.configs", "must not be empty");
    i = 0;
    if (inf.contains("classifiers"))
      for (const auto& c : inf.at("classifiers"))
        s.classifiers.push_back(
            parse_model_spec(c, "infer.classifiers[" + std::to_string(i++) + "]", diag));
    if (s.classifiers.empty()) diag.add("infer.classifiers", "must not be empty");
    if (inf.contains("cv_folds")) s.cv_folds = inf.at("cv_folds").get<int>();
    if (s.cv_folds < 2) diag.add("infer.cv_folds", "must be >= 2");
    if (inf.contains("aggregation")) {
      const auto a = inf.at("aggregation").get<std::string>();
      if (a == "mean") s.aggregation = AggregateMethod::mean;
      else if (a == "majority") s.aggregation = AggregateMethod::majority;
      else diag.add("infer.aggregation", "must be 'mean' or 'majority'");
    }
    cfg.infer = std::move(s);
  }

  if (j.contains("link")) {
    LinkSection s;
    const auto& lnk = j.at("link");
    int i = 0;
    if (lnk.contains("configs"))
      for (const auto& c : lnk.at("configs"))
        s.configs.push_back(
            parse_feature_config(c, "link.configs[" + std::to_string(i++) + "]", diag));
    if (s.configs.empty()) diag.add("link.configs", "must not be empty");
    for (std::size_t ci = 0; ci < s.configs.size(); ++ci)
      if (s.configs[ci].scope != Scope::day)
        diag.add("link.configs[" + std::to_string(ci) + "].scope",
                 "linkage requires daily-scope features");
    if (lnk.contains("attacks")) {
      for (const auto& a : lnk.at("attacks")) {
        try {
          s.attacks.push_back(parse_link_attack(a.get<std::string>()));
        } catch (const std::exception& e) {
          diag.add("link.attacks", e.what());
        }
      }
    }
    if (s.attacks.empty()) diag.add("link.attacks", "must not be empty");
    if (lnk.contains("cv_folds")) s.cv_folds = lnk.at("cv_folds").get<int>();
    if (s.cv_folds < 2) diag.add("link.cv_folds", "must be >= 2");
    if (lnk.contains("siamese"))
      s.siamese = parse_model_spec(lnk.at("siamese"), "link.siamese", diag);
    s.siamese.kind = ModelKind::siamese_dense;
    if (lnk.contains("forest")) {
      const auto& fo = lnk.at("forest");
      if (fo.contains("n_trees")) s.forest.n_trees = fo.at("n_trees").get<int>();
      if (fo.contains("max_depth")) s.forest.max_depth = fo.at("max_depth").get<int>();
    }
    if (lnk.contains("dump_scores")) s.dump_scores = lnk.at("dump_scores").get<bool>();
    cfg.link = std::move(s);
  }

  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path,
                                               Diagnostics& diag) {
  std::ifstream in(path);
  if (!in) {
    diag.add("config", "cannot read file '" + path + "'");
    return {};
  }
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  // an empty file is an empty config, which then fails the data-source check
  json j = json::object();
  if (text.find_first_not_of(" \t\r\n") != std::string::npos) {
    try {
      j = json::parse(text);
    } catch (const std::exception& e) {
      diag.add("config", std::string("JSON parse error: ") + e.what());
      return {};
    }
  }
  return parse_experiment_config(j, diag);
}

/// FNV-1a over the canonical (sorted-key, compact) config serialization.
inline std::string config_hash(const json& j) {
  const std::string s = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline json task_result_to_json(const TaskResult& r) {
  json j;
  j["attribute"] = r.attribute;
  j["config"] = feature_config_to_json(r.config);
  j["classifier"] = to_string(r.classifier.kind);
  if (r.classifier.kind == ModelKind::mlp)
    j["mlp_shape"] = r.classifier.mlp_shape;
  j["fold_aucs"] = r.fold_aucs;
  j["mean_auc"] = r.mean_auc;
  j["std_auc"] = r.std_auc;
  j["n_train"] = r.n_train;
  j["n_test"] = r.n_test;
  if (!r.flags.empty()) j["flags"] = r.flags;
  return j;
}

inline json link_result_to_json(const LinkResult& r) {
  json j;
  j["attack"] = to_string(r.attack);
  j["config"] = feature_config_to_json(r.config);
  j["fold_aucs"] = r.fold_aucs;
  j["mean_auc"] = r.mean_auc;
  j["std_auc"] = r.std_auc;
  j["n_train"] = r.n_train;
  j["n_test"] = r.n_test;
  return j;
}

}  // namespace stepleak
