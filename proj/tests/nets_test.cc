#include "stepleak/nets.hpp"

#include "stepleak/eval.hpp"
#include "stepleak/learners.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace stepleak {
namespace {

// Norm-based comparison of analytic vs central-difference gradients.
double gradient_gap(const std::vector<double>& analytic,
                    const std::vector<double>& numeric) {
  double diff = 0, scale = 0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    scale += analytic[i] * analytic[i] + numeric[i] * numeric[i];
  }
  return std::sqrt(diff) / (std::sqrt(scale) + 1e-12);
}

template <typename LossFn>
std::vector<double> central_difference(std::vector<double>& params,
                                       LossFn&& loss, double step = 1e-5) {
  std::vector<double> grad(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double orig = params[i];
    params[i] = orig + step;
    const double up = loss();
    params[i] = orig - step;
    const double down = loss();
    params[i] = orig;
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

std::vector<std::vector<double>> random_matrix(Rng& rng, int n, int d) {
  std::normal_distribution<double> g(0, 1);
  std::vector<std::vector<double>> X(n, std::vector<double>(d));
  for (auto& row : X)
    for (double& v : row) v = g(rng);
  return X;
}

std::vector<int> random_labels(Rng& rng, int n) {
  std::vector<int> y(n);
  bool h0 = false, h1 = false;
  while (!(h0 && h1)) {
    h0 = h1 = false;
    std::uniform_int_distribution<int> b(0, 1);
    for (int& v : y) {
      v = b(rng);
      (v ? h1 : h0) = true;
    }
  }
  return y;
}

TEST(GradientCheck, MlpMatchesFiniteDifferences) {
  Rng rng(1);
  std::uniform_int_distribution<int> dim(2, 8), count(2, 6), shape(1, 3);
  for (int t = 0; t < 20; ++t) {
    const int d = dim(rng), n = count(rng);
    auto [sizes, drops] = mlp_layer_plan(d, shape(rng), 0.0);
    MlpClassifier m(sizes, drops, 1000 + t);
    const auto X = random_matrix(rng, n, d);
    const auto y = random_labels(rng, n);
    std::vector<double> analytic;
    m.loss_and_grad(X, y, analytic);
    auto numeric = central_difference(
        m.net().params(), [&] {
          std::vector<double> unused;
          return m.loss_and_grad(X, y, unused);
        });
    EXPECT_LT(gradient_gap(analytic, numeric), 1e-4) << "case " << t;
  }
}

TEST(GradientCheck, LogregMatchesFiniteDifferences) {
  Rng rng(2);
  std::uniform_int_distribution<int> dim(1, 10), count(2, 8);
  for (int t = 0; t < 20; ++t) {
    const int d = dim(rng), n = count(rng);
    MlpClassifier m({d, 1}, {}, 2000 + t);
    const auto X = random_matrix(rng, n, d);
    const auto y = random_labels(rng, n);
    std::vector<double> analytic;
    m.loss_and_grad(X, y, analytic);
    auto numeric = central_difference(
        m.net().params(), [&] {
          std::vector<double> unused;
          return m.loss_and_grad(X, y, unused);
        });
    EXPECT_LT(gradient_gap(analytic, numeric), 1e-4) << "case " << t;
  }
}

TEST(GradientCheck, AutoencoderMatchesFiniteDifferences) {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    std::uniform_int_distribution<int> dim(4, 12), count(1, 4);
    const int d = dim(rng), n = count(rng);
    Autoencoder ae(autoencoder_layer_plan(d), 3000 + t);
    const auto X = random_matrix(rng, n, d);
    std::vector<double> analytic;
    ae.loss_and_grad(X, analytic);
    auto numeric = central_difference(
        ae.net().params(), [&] {
          std::vector<double> unused;
          return ae.loss_and_grad(X, unused);
        });
    EXPECT_LT(gradient_gap(analytic, numeric), 1e-4) << "case " << t;
  }
}

TEST(GradientCheck, SiameseMatchesFiniteDifferences) {
  Rng rng(4);
  std::uniform_int_distribution<int> dim(4, 10), count(2, 5);
  for (int t = 0; t < 20; ++t) {
    const int d = dim(rng), n = count(rng);
    SiameseDense net(d, 4000 + t);
    const auto A = random_matrix(rng, n, d);
    const auto B = random_matrix(rng, n, d);
    const auto y = random_labels(rng, n);
    std::vector<double> analytic;
    net.loss_and_grad(A, B, y, analytic);
    std::vector<double> p = net.params();
    auto numeric = central_difference(p, [&] {
      net.set_params(p);
      std::vector<double> unused;
      return net.loss_and_grad(A, B, y, unused);
    });
    net.set_params(p);
    EXPECT_LT(gradient_gap(analytic, numeric), 1e-4) << "case " << t;
  }
}

TEST(Mlp, ZeroWeightsScoreHalf) {
  MlpClassifier m({3, 2, 1}, {0.0}, 0);
  for (double& p : m.net().params()) p = 0;
  EXPECT_DOUBLE_EQ(m.score(std::vector<double>{1.0, -2.0, 3.0}), 0.5);
}

TEST(Mlp, DropoutZeroEqualsNoDropout) {
  MlpClassifier with({4, 6, 1}, {0.0}, 9);
  MlpClassifier without({4, 6, 1}, {}, 9);
  const std::vector<std::vector<double>> X = {{1, 2, 3, 4}, {0, -1, 2, 0.5},
                                              {3, 3, 3, 3}, {-2, 0, 1, 1}};
  const std::vector<int> y = {0, 1, 1, 0};
  TrainOptions opt;
  opt.epochs = 10;
  opt.seed = 5;
  with.train(X, y, opt);
  without.train(X, y, opt);
  ASSERT_EQ(with.net().params().size(), without.net().params().size());
  for (std::size_t i = 0; i < with.net().params().size(); ++i)
    EXPECT_DOUBLE_EQ(with.net().params()[i], without.net().params()[i]);
}

TEST(Mlp, TrainingIsBitReproducible) {
  Rng rng(10);
  const auto X = random_matrix(rng, 20, 5);
  const auto y = random_labels(rng, 20);
  ModelSpec spec;
  spec.kind = ModelKind::mlp;
  spec.mlp_shape = 2;
  spec.train.epochs = 5;
  spec.train.seed = 77;
  const auto m1 = fit(spec, X, y);
  const auto m2 = fit(spec, X, y);
  const auto& p1 = std::get<MlpClassifier>(m1.model).net().params();
  const auto& p2 = std::get<MlpClassifier>(m2.model).net().params();
  ASSERT_EQ(p1.size(), p2.size());
  for (std::size_t i = 0; i < p1.size(); ++i) EXPECT_EQ(p1[i], p2[i]);
}

TEST(Mlp, LossDecreasesOnSeparableData) {
  std::vector<std::vector<double>> X;
  std::vector<int> y;
  for (int i = 0; i < 20; ++i) {
    X.push_back({i < 10 ? -1.0 - 0.1 * i : 1.0 + 0.1 * i});
    y.push_back(i < 10 ? 0 : 1);
  }
  MlpClassifier m({1, 4, 1}, {0.0}, 3);
  TrainOptions opt;
  opt.epochs = 30;
  opt.seed = 3;
  const auto losses = m.train(X, y, opt);
  EXPECT_LT(losses.back(), losses.front());
}

TEST(Mlp, SolvesXorWhereLogregCannot) {
  const std::vector<std::vector<double>> X = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  const std::vector<int> y = {0, 1, 1, 0};
  TrainOptions opt;
  opt.epochs = 200;
  opt.learning_rate = 0.05;
  opt.seed = 12;
  MlpClassifier mlp({2, 4, 1}, {0.0}, 12);
  mlp.train(X, y, opt);
  int mlp_correct = 0;
  for (int i = 0; i < 4; ++i)
    mlp_correct += (mlp.score(X[i]) > 0.5) == (y[i] == 1);
  EXPECT_EQ(mlp_correct, 4);

  ModelSpec lr_spec;
  lr_spec.kind = ModelKind::logreg;
  lr_spec.train = opt;
  const auto lr = fit(lr_spec, X, y);
  int lr_correct = 0;
  for (int i = 0; i < 4; ++i)
    lr_correct += (lr.predict_score(X[i]) > 0.5) == (y[i] == 1);
  EXPECT_LE(lr_correct, 3);  // XOR is not linearly separable
}

TEST(Logreg, SeparableTrainingAuc) {
  std::vector<std::vector<double>> X;
  std::vector<int> y;
  for (int i = 0; i < 30; ++i) {
    X.push_back({i < 15 ? -2.0 - 0.1 * i : 2.0 + 0.1 * i});
    y.push_back(i < 15 ? 0 : 1);
  }
  ModelSpec spec;
  spec.kind = ModelKind::logreg;
  spec.train.epochs = 100;
  spec.train.learning_rate = 0.1;
  const auto m = fit(spec, X, y);
  std::vector<ScoredSample> scored;
  for (std::size_t i = 0; i < X.size(); ++i)
    scored.push_back({m.predict_score(X[i]), y[i]});
  EXPECT_DOUBLE_EQ(auc(scored), 1.0);
}

TEST(Logreg, ClosedFormScore) {
  MlpClassifier m({3, 1}, {}, 0);
  // params layout: 1x3 weights then bias
  m.net().params() = {0.5, -1.0, 2.0, 0.25};
  const std::vector<double> x = {2.0, 1.0, -0.5};
  const double z = 0.5 * 2.0 - 1.0 * 1.0 + 2.0 * -0.5 + 0.25;
  EXPECT_DOUBLE_EQ(m.score(x), 1.0 / (1.0 + std::exp(-z)));
}

TEST(LayerPlan, AutoencoderFormulas) {
  EXPECT_EQ(autoencoder_layer_plan(5760), (std::vector<int>{5760, 1440, 360, 1440, 5760}));
  EXPECT_EQ(autoencoder_layer_plan(100), (std::vector<int>{100, 50, 25, 50, 100}));
  EXPECT_EQ(autoencoder_layer_plan(4), (std::vector<int>{4, 2, 1, 2, 4}));
  EXPECT_EQ(autoencoder_layer_plan(10000), (std::vector<int>{10000, 2048, 512, 2048, 10000}));
  EXPECT_THROW(autoencoder_layer_plan(3), DataError);
}

TEST(Autoencoder, MemorizesSinglePoint) {
  Rng rng(20);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> v(10);
  for (double& x : v) x = u(rng);
  std::vector<std::vector<double>> X(50, v);
  Autoencoder ae(autoencoder_layer_plan(10), 21);
  TrainOptions opt;
  opt.epochs = 300;
  opt.learning_rate = 5e-3;
  opt.seed = 21;
  ae.train(X, opt);
  const auto rec = ae.reconstruct(v);
  double mse = 0;
  for (std::size_t i = 0; i < v.size(); ++i)
    mse += (rec[i] - v[i]) * (rec[i] - v[i]);
  mse /= v.size();
  EXPECT_LT(mse, 1e-3);
}

TEST(Autoencoder, BottleneckLengthMatchesPlan) {
  const auto plan = autoencoder_layer_plan(40);
  Autoencoder ae(plan, 5);
  EXPECT_EQ(ae.encode(std::vector<double>(40, 0.5)).size(),
            static_cast<std::size_t>(plan[2]));
}

TEST(Autoencoder, EncodeIgnoresDecoderWeights) {
  Autoencoder ae(autoencoder_layer_plan(12), 6);
  const std::vector<double> x(12, 0.3);
  const auto before = ae.encode(x);
  // zero out every parameter past the bottleneck layer
  const std::size_t decoder_start = ae.net().layer_offset(2);
  for (std::size_t i = decoder_start; i < ae.net().params().size(); ++i)
    ae.net().params()[i] = 0;
  EXPECT_EQ(ae.encode(x), before);
}

TEST(Siamese, SymmetricUnderSwapBitwise) {
  Rng rng(30);
  std::normal_distribution<double> g(0, 1);
  SiameseDense net(8, 31);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> a(8), b(8);
    for (double& v : a) v = g(rng);
    for (double& v : b) v = g(rng);
    EXPECT_EQ(net.score(a, b), net.score(b, a));
  }
}

TEST(Siamese, IdenticalInputsGiveSigmoidBias) {
  SiameseDense net(6, 32);
  const std::vector<double> a = {1, 2, 3, 4, 5, 6};
  EXPECT_DOUBLE_EQ(net.score(a, a), sigmoid(net.head().back()));
}

TEST(Siamese, DimensionMismatchThrows) {
  SiameseDense net(4, 0);
  EXPECT_THROW(net.score(std::vector<double>(4, 0.0), std::vector<double>(3, 0.0)),
               DataError);
}

TEST(Fit, RejectsBadInputs) {
  ModelSpec spec;
  spec.kind = ModelKind::logreg;
  EXPECT_THROW(fit(spec, {}, {}), DataError);
  EXPECT_THROW(fit(spec, {{1.0}, {2.0}}, {1, 1}), DataError);
  EXPECT_THROW(fit(spec, {{std::nan("")}, {2.0}}, {0, 1}), DataError);
}

TEST(Fit, PredictDimensionMismatchThrows) {
  ModelSpec spec;
  spec.kind = ModelKind::logreg;
  spec.train.epochs = 1;
  const auto m = fit(spec, {{1.0, 2.0}, {-1.0, 0.0}}, {1, 0});
  EXPECT_THROW(m.predict_score(std::vector<double>{1.0}), DataError);
}

TEST(ModelJson, MlpRoundTrip) {
  Rng rng(50);
  const auto X = random_matrix(rng, 12, 4);
  const auto y = random_labels(rng, 12);
  ModelSpec spec;
  spec.kind = ModelKind::mlp;
  spec.mlp_shape = 2;
  spec.train.epochs = 5;
  const auto m = fit(spec, X, y);
  const auto loaded = model_from_json(model_to_json(m));
  for (const auto& row : X)
    EXPECT_DOUBLE_EQ(m.predict_score(row), loaded.predict_score(row));
}

TEST(ModelJson, SiameseRoundTrip) {
  SiameseDense net(5, 60);
  TrainedModel tm;
  tm.spec.kind = ModelKind::siamese_dense;
  tm.model = net;
  const auto loaded = model_from_json(model_to_json(tm));
  const std::vector<double> a = {1, 0, -1, 2, 0.5}, b = {0, 1, 1, -2, 0.25};
  EXPECT_DOUBLE_EQ(tm.siamese_forward(a, b), loaded.siamese_forward(a, b));
}

}  // namespace
}  // namespace stepleak
