#pragma once

// Model roster shared by both attacks: spec, fit/predict dispatch, the
// autoencoder layer plan, and JSON save/load.

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "stepleak/common.hpp"
#include "stepleak/forest.hpp"
#include "stepleak/nets.hpp"

namespace stepleak {

enum class ModelKind {
  logreg,
  linear_svm,
  random_forest,
  mlp,
  autoencoder,
  siamese_dense,
};

inline ModelKind parse_model_kind(const std::string& s) {
  if (s == "logreg") return ModelKind::logreg;
  if (s == "linear_svm") return ModelKind::linear_svm;
  if (s == "random_forest") return ModelKind::random_forest;
  if (s == "mlp" || s == "mlp1" || s == "mlp2" || s == "mlp3")
    return ModelKind::mlp;
  if (s == "autoencoder") return ModelKind::autoencoder;
  if (s == "siamese_dense") return ModelKind::siamese_dense;
  // registry slots for the paper's heavier variants, deliberately unbuilt
  if (s == "svm_rbf" || s == "cnn" || s == "lstm" || s == "bilstm" ||
      s == "attention" || s == "cnn_siamese" || s == "lstm_siamese" ||
      s == "bilstm_siamese" || s == "attention_siamese" ||
      s == "cnn_autoencoder")
    throw DataError("model kind '" + s + "' is recognized but not implemented");
  throw DataError("unknown model kind '" + s + "'");
}

inline const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::logreg: return "logreg";
    case ModelKind::linear_svm: return "linear_svm";
    case ModelKind::random_forest: return "random_forest";
    case ModelKind::mlp: return "mlp";
    case ModelKind::autoencoder: return "autoencoder";
    default: return "siamese_dense";
  }
}

struct ModelSpec {
  ModelKind kind = ModelKind::logreg;
  int mlp_shape = 1;       // 1, 2 or 3 (see mlp_layer_plan)
  double dropout = 0.2;
  TrainOptions train;
  ForestOptions forest;

  void validate() const {
    if (dropout < 0.0 || dropout >= 1.0)
      throw DataError("ModelSpec: dropout must be in [0,1)");
    if (kind == ModelKind::mlp && (mlp_shape < 1 || mlp_shape > 3))
      throw DataError("ModelSpec: mlp_shape must be 1, 2 or 3");
  }
};

/// The three dense classifier shapes, parameterized by feature length l:
/// (l, l/4, d, 1), (l, l/2, d, l/8, 1), (l, l/2, d, l/4, d, l/16, 1).
/// Returns hidden+output sizes and per-hidden-layer dropout rates.
inline std::pair<std::vector<int>, std::vector<double>> mlp_layer_plan(
    int l, int shape, double dropout) {
  auto h = [l](int div) { return std::max(1, l / div); };
  switch (shape) {
    case 1:
      return {{l, h(4), 1}, {dropout}};
    case 2:
      return {{l, h(2), h(8), 1}, {dropout, 0.0}};
    case 3:
      return {{l, h(2), h(4), h(16), 1}, {dropout, dropout, 0.0}};
    default:
      throw DataError("mlp_layer_plan: shape must be 1, 2 or 3");
  }
}

/// Five-layer autoencoder plan from the input length.
inline std::vector<int> autoencoder_layer_plan(int l1) {
  if (l1 < 4) throw DataError("autoencoder_layer_plan: input too short");
  const int l2 = l1 > 255 ? std::min(2048, l1 / 4) : l1 / 2;
  const int l3 = l2 > 127 ? l2 / 4 : l2 / 2;
  if (l3 < 1)
    throw DataError("autoencoder_layer_plan: input compresses to nothing");
  return {l1, l2, l3, l2, l1};
}

/// A fitted model plus the preprocessing it owns when trained via a pipeline.
class TrainedModel {
 public:
  ModelSpec spec;
  std::variant<MlpClassifier, LinearSvm, RandomForest, Autoencoder,
               SiameseDense>
      model;

  double predict_score(std::span<const double> x) const {
    return std::visit(
        [&](const auto& m) -> double {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, MlpClassifier>) return m.score(x);
          else if constexpr (std::is_same_v<T, LinearSvm>) return m.score(x);
          else if constexpr (std::is_same_v<T, RandomForest>) return m.predict(x);
          else
            throw DataError(
                "predict_score: model kind does not score single vectors");
        },
        model);
  }

  double siamese_forward(std::span<const double> a,
                         std::span<const double> b) const {
    return std::get<SiameseDense>(model).score(a, b);
  }

  std::vector<double> autoencoder_encode(std::span<const double> x) const {
    return std::get<Autoencoder>(model).encode(x);
  }
};

inline void check_finite(const std::vector<std::vector<double>>& X) {
  for (const auto& row : X)
    for (double v : row)
      if (!std::isfinite(v)) throw DataError("fit: non-finite feature value");
}

inline void check_two_classes(const std::vector<int>& y) {
  bool has0 = false, has1 = false;
  for (int v : y) {
    if (v != 0 && v != 1) throw DataError("fit: labels must be 0/1");
    (v ? has1 : has0) = true;
  }
  if (!has0 || !has1) throw DataError("fit: training labels are single-class");
}

/// Supervised fit for classifier kinds. Autoencoder kind ignores y.
inline TrainedModel fit(const ModelSpec& spec,
                        const std::vector<std::vector<double>>& X,
                        const std::vector<int>& y) {
  spec.validate();
  if (X.empty()) throw DataError("fit: empty training set");
  check_finite(X);
  const int l = static_cast<int>(X.front().size());
  TrainedModel tm;
  tm.spec = spec;
  switch (spec.kind) {
    case ModelKind::logreg: {
      check_two_classes(y);
      MlpClassifier m({l, 1}, {}, spec.train.seed);
      m.train(X, y, spec.train);
      tm.model = std::move(m);
      break;
    }
    case ModelKind::mlp: {
      check_two_classes(y);
      auto [sizes, drops] = mlp_layer_plan(l, spec.mlp_shape, spec.dropout);
      MlpClassifier m(sizes, drops, spec.train.seed);
      m.train(X, y, spec.train);
      tm.model = std::move(m);
      break;
    }
    case ModelKind::linear_svm: {
      check_two_classes(y);
      LinearSvm m;
      m.fit(X, y, spec.train);
      tm.model = std::move(m);
      break;
    }
    case ModelKind::random_forest: {
      RandomForest m(spec.forest);
      m.fit(X, y);
      tm.model = std::move(m);
      break;
    }
    case ModelKind::autoencoder: {
      Autoencoder m(autoencoder_layer_plan(l), spec.train.seed);
      m.train(X, spec.train);
      tm.model = std::move(m);
      break;
    }
    case ModelKind::siamese_dense:
      throw DataError("fit: siamese_dense is trained on pairs, use fit_siamese");
  }
  return tm;
}

inline TrainedModel fit_siamese(const ModelSpec& spec,
                                const std::vector<std::vector<double>>& A,
                                const std::vector<std::vector<double>>& B,
                                const std::vector<int>& y) {
  spec.validate();
  if (A.empty() || A.size() != B.size() || A.size() != y.size())
    throw DataError("fit_siamese: inconsistent pair inputs");
  check_finite(A);
  check_finite(B);
  check_two_classes(y);
  SiameseDense m(static_cast<int>(A.front().size()), spec.train.seed);
  m.train(A, B, y, spec.train);
  TrainedModel tm;
  tm.spec = spec;
  tm.model = std::move(m);
  return tm;
}

// --- JSON persistence (spec + flat parameter arrays) ---

inline nlohmann::json model_to_json(const TrainedModel& tm) {
  nlohmann::json j;
  j["kind"] = to_string(tm.spec.kind);
  j["mlp_shape"] = tm.spec.mlp_shape;
  j["dropout"] = tm.spec.dropout;
  j["seed"] = tm.spec.train.seed;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, MlpClassifier>) {
          j["layer_sizes"] = m.net().layer_sizes();
          j["dropout_rates"] = m.net().dropout_rates();
          j["params"] = m.net().params();
        } else if constexpr (std::is_same_v<T, Autoencoder>) {
          j["layer_sizes"] = m.net().layer_sizes();
          j["params"] = m.net().params();
        } else if constexpr (std::is_same_v<T, SiameseDense>) {
          j["input_size"] = m.input_size();
          j["embed_params"] = m.embed().params();
          j["head_params"] = m.head();
        } else if constexpr (std::is_same_v<T, LinearSvm>) {
          j["weights"] = m.weights();
          j["bias"] = m.bias();
        } else if constexpr (std::is_same_v<T, RandomForest>) {
          nlohmann::json trees = nlohmann::json::array();
          for (const auto& t : m.trees()) {
            nlohmann::json nodes = nlohmann::json::array();
            for (const auto& n : t.nodes())
              nodes.push_back({{"f", n.feature},
                               {"t", n.threshold},
                               {"l", n.left},
                               {"r", n.right},
                               {"v", n.leaf_value}});
            trees.push_back(std::move(nodes));
          }
          j["trees"] = std::move(trees);
          j["n_trees"] = m.options().n_trees;
        }
      },
      tm.model);
  return j;
}

inline TrainedModel model_from_json(const nlohmann::json& j) {
  TrainedModel tm;
  tm.spec.kind = parse_model_kind(j.at("kind").get<std::string>());
  tm.spec.mlp_shape = j.value("mlp_shape", 1);
  tm.spec.dropout = j.value("dropout", 0.2);
  tm.spec.train.seed = j.value("seed", std::uint64_t{0});
  switch (tm.spec.kind) {
    case ModelKind::logreg:
    case ModelKind::mlp: {
      MlpClassifier m(j.at("layer_sizes").get<std::vector<int>>(),
                      j.at("dropout_rates").get<std::vector<double>>(), 0);
      m.net().params() = j.at("params").get<std::vector<double>>();
      tm.model = std::move(m);
      break;
    }
    case ModelKind::autoencoder: {
      Autoencoder m(j.at("layer_sizes").get<std::vector<int>>(), 0);
      m.net().params() = j.at("params").get<std::vector<double>>();
      tm.model = std::move(m);
      break;
    }
    case ModelKind::siamese_dense: {
      SiameseDense m(j.at("input_size").get<int>(), 0);
      m.embed().params() = j.at("embed_params").get<std::vector<double>>();
      m.head() = j.at("head_params").get<std::vector<double>>();
      tm.model = std::move(m);
      break;
    }
    case ModelKind::linear_svm: {
      LinearSvm m;
      m.weights() = j.at("weights").get<std::vector<double>>();
      m.bias() = j.at("bias").get<double>();
      tm.model = std::move(m);
      break;
    }
    case ModelKind::random_forest: {
      RandomForest m;
      for (const auto& tj : j.at("trees")) {
        DecisionTree t;
        for (const auto& nj : tj) {
          DecisionTree::Node n;
          n.feature = nj.at("f").get<int>();
          n.threshold = nj.at("t").get<double>();
          n.left = nj.at("l").get<int>();
          n.right = nj.at("r").get<int>();
          n.leaf_value = nj.at("v").get<double>();
          t.nodes().push_back(n);
        }
        m.trees().push_back(std::move(t));
      }
      tm.model = std::move(m);
      break;
    }
  }
  return tm;
}

}  // namespace stepleak
