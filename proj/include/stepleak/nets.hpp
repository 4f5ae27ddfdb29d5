#pragma once

// Minimal dense-network engine: feed-forward MLP with tanh hidden units,
// inverted dropout, Adam updates, and flat parameter access for
// finite-difference gradient checks. Builds classifiers (sigmoid + BCE),
// autoencoders (linear output + MSE), and the dense siamese head.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "stepleak/common.hpp"

namespace stepleak {

struct TrainOptions {
  double learning_rate = 1e-3;
  int epochs = 50;
  int batch_size = 32;
  std::uint64_t seed = 0;
};

/// Adam with bias correction; one moment pair per parameter.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(std::size_t n_params, double lr = 1e-3,
                         double beta1 = 0.9, double beta2 = 0.999,
                         double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps),
        m_(n_params, 0.0), v_(n_params, 0.0) {}

  void step(std::vector<double>& params, const std::vector<double>& grads) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i] * grads[i];
      params[i] -= lr_ * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + eps_);
    }
  }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<double> m_, v_;
};

inline double sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z))
                : std::exp(z) / (1.0 + std::exp(z));
}

/// Numerically stable BCE on a logit.
inline double bce_with_logit(double logit, double label) {
  return std::max(logit, 0.0) - logit * label +
         std::log1p(std::exp(-std::abs(logit)));
}

/// Per-hidden-layer inverted dropout masks (0 or 1/keep per unit).
using DropoutMasks = std::vector<std::vector<double>>;

/// Dense feed-forward network. Hidden layers use tanh; the output layer is
/// linear (callers apply sigmoid/MSE in the loss). dropout_after[i] is the
/// inverted-dropout rate on the activations of hidden layer i.
class DenseNet {
 public:
  DenseNet() = default;

  DenseNet(std::vector<int> layer_sizes, std::vector<double> dropout_after,
           std::uint64_t seed)
      : sizes_(std::move(layer_sizes)), dropout_(std::move(dropout_after)) {
    if (sizes_.size() < 2) throw DataError("DenseNet: need >= 2 layer sizes");
    for (int s : sizes_)
      if (s < 1) throw DataError("DenseNet: layer sizes must be >= 1");
    dropout_.resize(sizes_.size() - 2, 0.0);  // one slot per hidden layer
    for (double d : dropout_)
      if (d < 0.0 || d >= 1.0) throw DataError("DenseNet: dropout in [0,1)");
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
      std::uniform_real_distribution<double> init(-bound, bound);
      for (int i = 0; i < sizes_[l + 1] * sizes_[l]; ++i)
        params_.push_back(init(rng));
      for (int i = 0; i < sizes_[l + 1]; ++i) params_.push_back(0.0);
    }
  }

  const std::vector<int>& layer_sizes() const { return sizes_; }
  const std::vector<double>& dropout_rates() const { return dropout_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  std::size_t layer_offset(std::size_t weight_layer) const {
    std::size_t off = 0;
    for (std::size_t l = 0; l < weight_layer; ++l)
      off += static_cast<std::size_t>(sizes_[l + 1]) * sizes_[l] + sizes_[l + 1];
    return off;
  }

  /// Full activation trace: acts[0] = input, acts[l] = post-activation
  /// (and post-mask) output of weight layer l.
  std::vector<std::vector<double>> forward_pass(
      std::span<const double> x, const DropoutMasks* masks = nullptr) const {
    if (x.size() != static_cast<std::size_t>(sizes_.front()))
      throw DataError("DenseNet: input dimension mismatch (got " +
                      std::to_string(x.size()) + ", want " +
                      std::to_string(sizes_.front()) + ")");
    std::vector<std::vector<double>> acts;
    acts.emplace_back(x.begin(), x.end());
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      const int n_out = sizes_[l + 1], n_in = sizes_[l];
      const std::size_t off = layer_offset(l);
      const auto& a = acts.back();
      std::vector<double> z(n_out);
      for (int i = 0; i < n_out; ++i) {
        double acc = params_[off + static_cast<std::size_t>(n_out) * n_in + i];
        for (int j = 0; j < n_in; ++j) acc += params_[off + i * n_in + j] * a[j];
        z[i] = acc;
      }
      if (l + 2 < sizes_.size()) {
        for (double& v : z) v = std::tanh(v);
        if (masks && l < masks->size())
          for (int i = 0; i < n_out; ++i) z[i] *= (*masks)[l][i];
      }
      acts.push_back(std::move(z));
    }
    return acts;
  }

  /// Inference output, dropout disabled.
  std::vector<double> forward(std::span<const double> x) const {
    return forward_pass(x).back();
  }

  /// Backprop through a recorded forward pass. `grad_out` = dLoss/d(output).
  /// Accumulates into grad_params; returns dLoss/d(input).
  std::vector<double> backward(const std::vector<std::vector<double>>& acts,
                               std::span<const double> grad_out,
                               std::vector<double>& grad_params,
                               const DropoutMasks* masks = nullptr) const {
    std::vector<double> delta(grad_out.begin(), grad_out.end());
    for (std::size_t l = sizes_.size() - 1; l >= 1; --l) {
      const int n_out = sizes_[l], n_in = sizes_[l - 1];
      const std::size_t off = layer_offset(l - 1);
      if (l != sizes_.size() - 1) {
        // undo mask to recover tanh value; masked-out units carry zero delta
        for (int i = 0; i < n_out; ++i) {
          double m = 1.0;
          if (masks && l - 1 < masks->size()) m = (*masks)[l - 1][i];
          if (m == 0.0) {
            delta[i] = 0.0;
            continue;
          }
          const double a = acts[l][i] / m;
          delta[i] *= m * (1.0 - a * a);
        }
      }
      const auto& a_in = acts[l - 1];
      for (int i = 0; i < n_out; ++i) {
        const double d = delta[i];
        for (int j = 0; j < n_in; ++j)
          grad_params[off + i * n_in + j] += d * a_in[j];
        grad_params[off + static_cast<std::size_t>(n_out) * n_in + i] += d;
      }
      std::vector<double> prev(n_in, 0.0);
      for (int i = 0; i < n_out; ++i) {
        const double d = delta[i];
        for (int j = 0; j < n_in; ++j)
          prev[j] += params_[off + i * n_in + j] * d;
      }
      delta = std::move(prev);
    }
    return delta;
  }

  DropoutMasks sample_masks(Rng& rng) const {
    DropoutMasks masks;
    for (std::size_t h = 0; h < dropout_.size(); ++h) {
      std::vector<double> m(sizes_[h + 1], 1.0);
      if (dropout_[h] > 0.0) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const double keep = 1.0 - dropout_[h];
        for (double& v : m) v = u(rng) < keep ? 1.0 / keep : 0.0;
      }
      masks.push_back(std::move(m));
    }
    return masks;
  }

 private:
  std::vector<int> sizes_;
  std::vector<double> dropout_;
  std::vector<double> params_;
};

/// Binary classifier on top of DenseNet: scalar logit, sigmoid score, BCE.
class MlpClassifier {
 public:
  MlpClassifier() = default;
  MlpClassifier(std::vector<int> layer_sizes, std::vector<double> dropout,
                std::uint64_t seed)
      : net_(std::move(layer_sizes), std::move(dropout), seed) {
    if (net_.output_size() != 1)
      throw DataError("MlpClassifier: output layer must have size 1");
  }

  DenseNet& net() { return net_; }
  const DenseNet& net() const { return net_; }

  double score(std::span<const double> x) const {
    return sigmoid(net_.forward(x)[0]);
  }

  /// Mean BCE over the batch; fills grad (layout of net().params()).
  double loss_and_grad(const std::vector<std::vector<double>>& X,
                       const std::vector<int>& y, std::vector<double>& grad,
                       const std::vector<DropoutMasks>* masks = nullptr) const {
    grad.assign(net_.params().size(), 0.0);
    double loss = 0;
    const double inv_n = 1.0 / static_cast<double>(X.size());
    for (std::size_t i = 0; i < X.size(); ++i) {
      const DropoutMasks* m = masks ? &(*masks)[i] : nullptr;
      auto acts = net_.forward_pass(X[i], m);
      const double logit = acts.back()[0];
      loss += bce_with_logit(logit, y[i]) * inv_n;
      const double g = (sigmoid(logit) - y[i]) * inv_n;
      net_.backward(acts, std::vector<double>{g}, grad, m);
    }
    return loss;
  }

  std::vector<double> train(const std::vector<std::vector<double>>& X,
                            const std::vector<int>& y,
                            const TrainOptions& opt) {
    if (X.empty()) throw DataError("MlpClassifier: empty training set");
    AdamOptimizer adam(net_.params().size(), opt.learning_rate);
    Rng rng(mix_seed(opt.seed, 0x6d6c70));
    std::vector<std::size_t> order(X.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> epoch_losses;
    std::vector<double> grad;
    for (int e = 0; e < opt.epochs; ++e) {
      std::shuffle(order.begin(), order.end(), rng);
      double epoch_loss = 0;
      for (std::size_t start = 0; start < order.size();
           start += opt.batch_size) {
        const std::size_t end = std::min(order.size(), start + opt.batch_size);
        std::vector<std::vector<double>> bx;
        std::vector<int> by;
        std::vector<DropoutMasks> bmasks;
        for (std::size_t k = start; k < end; ++k) {
          bx.push_back(X[order[k]]);
          by.push_back(y[order[k]]);
          bmasks.push_back(net_.sample_masks(rng));
        }
        epoch_loss += loss_and_grad(bx, by, grad, &bmasks) *
                      static_cast<double>(bx.size());
        adam.step(net_.params(), grad);
      }
      epoch_losses.push_back(epoch_loss / static_cast<double>(X.size()));
    }
    return epoch_losses;
  }

 private:
  DenseNet net_;
};

/// Symmetric autoencoder; encode() returns the bottleneck activations.
class Autoencoder {
 public:
  Autoencoder() = default;
  Autoencoder(const std::vector<int>& layer_plan, std::uint64_t seed)
      : net_(layer_plan, {}, seed),
        bottleneck_layer_(layer_plan.size() / 2) {
    if (layer_plan.size() != 5)
      throw DataError("Autoencoder: expected a 5-layer plan");
  }

  DenseNet& net() { return net_; }
  const DenseNet& net() const { return net_; }

  std::vector<double> encode(std::span<const double> x) const {
    return net_.forward_pass(x).at(bottleneck_layer_);
  }

  std::vector<double> reconstruct(std::span<const double> x) const {
    return net_.forward(x);
  }

  /// Mean-over-samples MSE (averaged over output dimensions too).
  double loss_and_grad(const std::vector<std::vector<double>>& X,
                       std::vector<double>& grad) const {
    grad.assign(net_.params().size(), 0.0);
    double loss = 0;
    const double inv =
        1.0 / (static_cast<double>(X.size()) * net_.output_size());
    for (const auto& x : X) {
      auto acts = net_.forward_pass(x);
      const auto& out = acts.back();
      std::vector<double> grad_out(out.size());
      for (std::size_t j = 0; j < out.size(); ++j) {
        const double r = out[j] - x[j];
        loss += r * r * inv;
        grad_out[j] = 2.0 * r * inv;
      }
      net_.backward(acts, grad_out, grad);
    }
    return loss;
  }

  std::vector<double> train(const std::vector<std::vector<double>>& X,
                            const TrainOptions& opt) {
    if (X.empty()) throw DataError("Autoencoder: empty training set");
    AdamOptimizer adam(net_.params().size(), opt.learning_rate);
    Rng rng(mix_seed(opt.seed, 0x6165));
    std::vector<std::size_t> order(X.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> epoch_losses;
    std::vector<double> grad;
    for (int e = 0; e < opt.epochs; ++e) {
      std::shuffle(order.begin(), order.end(), rng);
      double epoch_loss = 0;
      for (std::size_t start = 0; start < order.size();
           start += opt.batch_size) {
        const std::size_t end = std::min(order.size(), start + opt.batch_size);
        std::vector<std::vector<double>> bx;
        for (std::size_t k = start; k < end; ++k) bx.push_back(X[order[k]]);
        epoch_loss += loss_and_grad(bx, grad) * static_cast<double>(bx.size());
        adam.step(net_.params(), grad);
      }
      epoch_losses.push_back(epoch_loss / static_cast<double>(X.size()));
    }
    return epoch_losses;
  }

 private:
  DenseNet net_;
  std::size_t bottleneck_layer_ = 2;
};

/// Dense siamese scorer: shared embedding net (input -> l/2 -> l/4, tanh),
/// element-wise |a - b|, then a linear head with sigmoid. Exactly symmetric
/// under input swap.
class SiameseDense {
 public:
  SiameseDense() = default;
  SiameseDense(int input_size, std::uint64_t seed)
      : embed_({input_size, std::max(1, input_size / 2),
                std::max(1, input_size / 4)},
               {}, mix_seed(seed, 0x736d)) {
    const int e = embed_dim();
    Rng rng(mix_seed(seed, 0x68656164));
    const double bound = 1.0 / std::sqrt(static_cast<double>(e));
    std::uniform_real_distribution<double> init(-bound, bound);
    head_.assign(e + 1, 0.0);
    for (int i = 0; i < e; ++i) head_[i] = init(rng);
  }

  int input_size() const { return embed_.input_size(); }
  int embed_dim() const { return embed_.layer_sizes().back(); }

  // Full parameter vector: embedding params followed by head (weights, bias).
  std::vector<double> params() const {
    std::vector<double> p = embed_.params();
    p.insert(p.end(), head_.begin(), head_.end());
    return p;
  }
  void set_params(const std::vector<double>& p) {
    if (p.size() != embed_.params().size() + head_.size())
      throw DataError("SiameseDense: parameter size mismatch");
    std::copy(p.begin(), p.begin() + embed_.params().size(),
              embed_.params().begin());
    std::copy(p.begin() + embed_.params().size(), p.end(), head_.begin());
  }
  std::size_t n_params() const { return embed_.params().size() + head_.size(); }

  double logit(std::span<const double> a, std::span<const double> b) const {
    if (a.size() != b.size())
      throw DataError("SiameseDense: pair dimension mismatch");
    const auto ea = embed_.forward(a);
    const auto eb = embed_.forward(b);
    double z = head_.back();
    for (int i = 0; i < embed_dim(); ++i)
      z += head_[i] * std::abs(ea[i] - eb[i]);
    return z;
  }

  double score(std::span<const double> a, std::span<const double> b) const {
    return sigmoid(logit(a, b));
  }

  /// Mean BCE over pairs; grad in params() layout.
  double loss_and_grad(const std::vector<std::vector<double>>& A,
                       const std::vector<std::vector<double>>& B,
                       const std::vector<int>& y,
                       std::vector<double>& grad) const {
    const std::size_t ne = embed_.params().size();
    grad.assign(n_params(), 0.0);
    std::vector<double> embed_grad(ne, 0.0);
    double loss = 0;
    const double inv_n = 1.0 / static_cast<double>(A.size());
    const int e = embed_dim();
    for (std::size_t i = 0; i < A.size(); ++i) {
      auto acts_a = embed_.forward_pass(A[i]);
      auto acts_b = embed_.forward_pass(B[i]);
      const auto& ea = acts_a.back();
      const auto& eb = acts_b.back();
      double z = head_.back();
      for (int j = 0; j < e; ++j) z += head_[j] * std::abs(ea[j] - eb[j]);
      loss += bce_with_logit(z, y[i]) * inv_n;
      const double g = (sigmoid(z) - y[i]) * inv_n;
      std::vector<double> ga(e), gb(e);
      for (int j = 0; j < e; ++j) {
        const double diff = ea[j] - eb[j];
        const double sgn = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
        grad[ne + j] += g * std::abs(diff);
        ga[j] = g * head_[j] * sgn;
        gb[j] = -ga[j];
      }
      grad[ne + e] += g;
      embed_.backward(acts_a, ga, embed_grad);
      embed_.backward(acts_b, gb, embed_grad);
    }
    std::copy(embed_grad.begin(), embed_grad.end(), grad.begin());
    return loss;
  }

  std::vector<double> train(const std::vector<std::vector<double>>& A,
                            const std::vector<std::vector<double>>& B,
                            const std::vector<int>& y,
                            const TrainOptions& opt) {
    if (A.empty()) throw DataError("SiameseDense: empty training set");
    AdamOptimizer adam(n_params(), opt.learning_rate);
    Rng rng(mix_seed(opt.seed, 0x736961));
    std::vector<std::size_t> order(A.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> epoch_losses;
    std::vector<double> grad;
    std::vector<double> p = params();
    for (int ep = 0; ep < opt.epochs; ++ep) {
      std::shuffle(order.begin(), order.end(), rng);
      double epoch_loss = 0;
      for (std::size_t start = 0; start < order.size();
           start += opt.batch_size) {
        const std::size_t end = std::min(order.size(), start + opt.batch_size);
        std::vector<std::vector<double>> ba, bb;
        std::vector<int> by;
        for (std::size_t k = start; k < end; ++k) {
          ba.push_back(A[order[k]]);
          bb.push_back(B[order[k]]);
          by.push_back(y[order[k]]);
        }
        epoch_loss += loss_and_grad(ba, bb, by, grad) *
                      static_cast<double>(ba.size());
        adam.step(p, grad);
        set_params(p);
      }
      epoch_losses.push_back(epoch_loss / static_cast<double>(A.size()));
    }
    return epoch_losses;
  }

  const DenseNet& embed() const { return embed_; }
  DenseNet& embed() { return embed_; }
  const std::vector<double>& head() const { return head_; }
  std::vector<double>& head() { return head_; }

 private:
  DenseNet embed_;
  std::vector<double> head_;  // embed_dim weights + bias
};

}  // namespace stepleak
