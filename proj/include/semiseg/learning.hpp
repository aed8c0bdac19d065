#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "semiseg/core.hpp"
#include "semiseg/framewise.hpp"
#include "semiseg/svd.hpp"

namespace semiseg {

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

inline int hamming_loss(std::span<const int> truth, std::span<const int> pred) {
  if (truth.size() != pred.size()) throw DimensionError("label sequences differ in length");
  int n = 0;
  for (std::size_t t = 0; t < truth.size(); ++t) n += truth[t] != pred[t];
  return n;
}

/// Sum over ground-truth segments of the fraction of frames predicted wrong.
inline double overlap_loss(const Segmentation& truth, std::span<const int> pred) {
  if (truth.total_frames() != static_cast<int>(pred.size())) {
    throw DimensionError("segmentation and label sequence differ in length");
  }
  double loss = 0.0;
  for (const Segment& s : truth.segments()) {
    int hits = 0;
    for (int t = s.start; t < s.end(); ++t) hits += pred[t] == s.label;
    loss += 1.0 - static_cast<double>(hits) / s.duration;
  }
  return loss;
}

inline double structured_loss(LossKind kind, std::span<const int> truth,
                              std::span<const int> pred) {
  if (kind == LossKind::kHamming) return hamming_loss(truth, pred);
  return overlap_loss(labels_to_segments(truth), pred);
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class Regularizer { kNone, kL2, kL1, kNuclear };

struct TrainConfig {
  double c_reg = 1.0;
  double eta = 1.0;
  int epochs = 50;
  int batch_size = 1;
  Regularizer regularizer = Regularizer::kL2;
  LossKind loss = LossKind::kHamming;
  double adagrad_epsilon = 1e-8;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(c_reg > 0.0)) throw InvalidArgument("C must be positive");
    if (!(eta > 0.0)) throw InvalidArgument("step size must be positive");
    if (epochs < 1) throw InvalidArgument("epochs must be positive");
    if (batch_size < 1) throw InvalidArgument("batch size must be positive");
    if (!(adagrad_epsilon >= 0.0)) throw InvalidArgument("adagrad epsilon must be >= 0");
  }
};

struct Sample {
  FeatureSequence features;
  LabelSequence labels;
};

// ---------------------------------------------------------------------------
// Regularizers
// ---------------------------------------------------------------------------

/// Regularizer value whose gradient is reg_grad: 0.5 ||w||^2 for L2, ||w||_1
/// for L1, and the sum of per-block nuclear norms for NUCLEAR.
inline double regularizer_value(const WeightSet& w, Regularizer kind) {
  double r = 0.0;
  switch (kind) {
    case Regularizer::kNone:
      break;
    case Regularizer::kL2:
      w.for_each([&](double v) { r += 0.5 * v * v; });
      break;
    case Regularizer::kL1:
      w.for_each([&](double v) { r += std::abs(v); });
      break;
    case Regularizer::kNuclear:
      for (Potential p : kAllPotentials)
        if (w.has(p)) r += nuclear_norm(w.block(p));
      break;
  }
  return r;
}

/// L2 -> w, L1 -> sign(w) with sign(0) = 0, NUCLEAR -> U V^T per block.
inline WeightSet reg_grad(const WeightSet& w, Regularizer kind) {
  WeightSet g = w;
  switch (kind) {
    case Regularizer::kNone:
      g.scale(0.0);
      break;
    case Regularizer::kL2:
      break;
    case Regularizer::kL1:
      g.for_each([](double& v) { v = static_cast<double>((v > 0.0) - (v < 0.0)); });
      break;
    case Regularizer::kNuclear:
      for (Potential p : kAllPotentials)
        if (w.has(p)) g.block(p) = polar_factor(w.block(p));
      break;
  }
  return g;
}

// ---------------------------------------------------------------------------
// SSVM
// ---------------------------------------------------------------------------

namespace detail {

inline void check_sample(const Sample& s, const PotentialConfig& cfg) {
  if (s.features.feature_dim() != cfg.feature_dim) {
    throw DimensionError("sample feature dimension " + std::to_string(s.features.feature_dim()) +
                         " does not match " + std::to_string(cfg.feature_dim));
  }
  if (static_cast<int>(s.labels.size()) != s.features.num_frames()) {
    throw DimensionError("sample labels and features differ in length");
  }
  check_labels(s.labels, cfg.num_classes);
}

}  // namespace detail

/// Loss-augmented prediction for one sample.
inline LabelSequence loss_augmented_decode(const WeightSet& w, const Sample& s,
                                           const PotentialConfig& cfg, LossKind loss) {
  return framewise_decode(w, s.features, cfg, LossAugmentation{s.labels, loss});
}

/// Hinge objective with the maximizing labelings held fixed:
/// R(w) + (C/N) sum_n [loss(y*, yhat) + w . (Psi(yhat) - Psi(y*))].
inline double fixed_label_objective(const WeightSet& w, std::span<const Sample> batch,
                                    std::span<const LabelSequence> predicted,
                                    const PotentialConfig& cfg, const TrainConfig& tc) {
  if (batch.size() != predicted.size()) throw DimensionError("one prediction per sample needed");
  double data = 0.0;
  for (std::size_t n = 0; n < batch.size(); ++n) {
    const Sample& s = batch[n];
    data += structured_loss(tc.loss, s.labels, predicted[n]) +
            framewise_energy(w, s.features, predicted[n], cfg) -
            framewise_energy(w, s.features, s.labels, cfg);
  }
  return regularizer_value(w, tc.regularizer) +
         tc.c_reg / static_cast<double>(batch.size()) * data;
}

/// Regularized structured hinge with exact loss-augmented maximization.
inline double ssvm_objective(const WeightSet& w, std::span<const Sample> batch,
                             const PotentialConfig& cfg, const TrainConfig& tc) {
  std::vector<LabelSequence> yhat;
  yhat.reserve(batch.size());
  for (const Sample& s : batch) yhat.push_back(loss_augmented_decode(w, s, cfg, tc.loss));
  return fixed_label_objective(w, batch, yhat, cfg, tc);
}

/// reg_grad(w) + (C/N) sum_n [Psi(X, yhat) - Psi(X, y*)], yhat loss-augmented.
inline WeightSet ssvm_subgradient(const WeightSet& w, std::span<const Sample> batch,
                                  const PotentialConfig& cfg, const TrainConfig& tc) {
  if (batch.empty()) throw InvalidArgument("empty batch");
  WeightSet g = reg_grad(w, tc.regularizer);
  const double scale = tc.c_reg / static_cast<double>(batch.size());
  for (const Sample& s : batch) {
    detail::check_sample(s, cfg);
    const LabelSequence yhat = loss_augmented_decode(w, s, cfg, tc.loss);
    g.axpy(scale, joint_features(s.features, yhat, cfg));
    g.axpy(-scale, joint_features(s.features, s.labels, cfg));
  }
  return g;
}

// ---------------------------------------------------------------------------
// Adagrad
// ---------------------------------------------------------------------------

/// Accumulated squared gradients, shaped like the weights.
struct AdagradState {
  WeightSet accum;

  static AdagradState zeros_like(const WeightSet& w) {
    AdagradState s{w};
    s.accum.scale(0.0);
    return s;
  }
};

/// accum += g^2; w -= eta g / (sqrt(accum) + eps). Coordinates with g = 0 are
/// left untouched.
inline void adagrad_step(AdagradState& state, WeightSet& w, const WeightSet& g, double eta,
                         double eps) {
  if (!state.accum.same_shape(w) || !g.same_shape(w)) {
    throw DimensionError("adagrad state, weights and gradient differ in shape");
  }
  for (Potential p : kAllPotentials) {
    if (!w.has(p)) continue;
    auto acc = state.accum.block(p).data();
    auto wv = w.block(p).data();
    auto gv = g.block(p).data();
    for (std::size_t i = 0; i < wv.size(); ++i) {
      if (gv[i] == 0.0) continue;
      acc[i] += gv[i] * gv[i];
      wv[i] -= eta * gv[i] / (std::sqrt(acc[i]) + eps);
    }
  }
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainResult {
  WeightSet weights;
  /// Regularized hinge objective on the full dataset after each epoch.
  std::vector<double> objective;
};

/// Stochastic subgradient descent with Adagrad steps, starting from zeros.
inline TrainResult train_ssvm(std::span<const Sample> dataset, const PotentialConfig& cfg,
                              const TrainConfig& tc) {
  cfg.validate();
  tc.validate();
  if (dataset.empty()) throw InvalidArgument("empty training set");
  for (const Sample& s : dataset) detail::check_sample(s, cfg);

  TrainResult result{WeightSet::zeros(cfg), {}};
  AdagradState state = AdagradState::zeros_like(result.weights);
  std::mt19937_64 rng(tc.seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Sample> batch;

  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t begin = 0; begin < order.size(); begin += tc.batch_size) {
      const std::size_t end = std::min(order.size(), begin + tc.batch_size);
      batch.clear();
      for (std::size_t i = begin; i < end; ++i) batch.push_back(dataset[order[i]]);
      const WeightSet g = ssvm_subgradient(result.weights, batch, cfg, tc);
      adagrad_step(state, result.weights, g, tc.eta, tc.adagrad_epsilon);
    }
    result.objective.push_back(ssvm_objective(result.weights, dataset, cfg, tc));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Recurrent baseline
// ---------------------------------------------------------------------------

struct RnnForward {
  Matrix activations;  // T x C
  LabelSequence labels;
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

namespace detail {

inline void check_rnn_shapes(const Matrix& w_u, const Matrix& w_p, const FeatureSequence& x) {
  if (w_u.cols() != static_cast<std::size_t>(x.feature_dim())) {
    throw DimensionError("unary weights do not match the feature dimension");
  }
  if (w_p.rows() != w_u.rows() || w_p.cols() != w_u.rows()) {
    throw DimensionError("pairwise weights must be C x C");
  }
}

/// Forward pass with the previous-label path either computed greedily or given.
inline RnnForward rnn_forward_impl(const Matrix& w_u, const Matrix& w_p,
                                   const FeatureSequence& x,
                                   const LabelSequence* frozen_path) {
  check_rnn_shapes(w_u, w_p, x);
  const int T = x.num_frames();
  const int C = static_cast<int>(w_u.rows());
  const int F = x.feature_dim();
  RnnForward out{Matrix(T, C, 0.0), LabelSequence(T, 0)};
  for (int t = 0; t < T; ++t) {
    const int prev = t == 0 ? -1 : (frozen_path ? (*frozen_path)[t - 1] : out.labels[t - 1]);
    for (int c = 0; c < C; ++c) {
      double z = 0.0;
      for (int f = 0; f < F; ++f) z += w_u(c, f) * x(t, f);
      if (prev >= 0) z += w_p(prev, c);
      out.activations(t, c) = sigmoid(z);
    }
    const auto row = out.activations.row(t);
    out.labels[t] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

}  // namespace detail

/// a(t, c) = sigmoid(w_u[c] . X_t + w_p[yhat_{t-1}][c]) with yhat_{t-1} the
/// argmax of the previous activations; no recurrent term at t = 0.
inline RnnForward rnn_baseline_forward(const Matrix& w_u, const Matrix& w_p,
                                       const FeatureSequence& x) {
  return detail::rnn_forward_impl(w_u, w_p, x, nullptr);
}

struct RnnGradients {
  Matrix grad_u;  // C x F
  Matrix grad_p;  // C x C
};

enum class RnnGradient {
  /// sum_t e_t X_t^T and sum_t e_t 1[yhat_{t-1}]^T with e_t = y*_t - a_t, as
  /// written; a descent direction that omits the sigmoid derivative.
  kLiteral,
  /// Exact gradient of 0.5 sum (y* - a)^2 with the argmax path held fixed.
  kExact,
};

/// Squared-error objective, optionally with the previous-label path frozen.
inline double rnn_objective(const Matrix& w_u, const Matrix& w_p, const FeatureSequence& x,
                            std::span<const int> y_star,
                            const LabelSequence* frozen_path = nullptr) {
  const RnnForward fw = detail::rnn_forward_impl(w_u, w_p, x, frozen_path);
  const int C = static_cast<int>(w_u.rows());
  check_labels(y_star, C);
  if (static_cast<int>(y_star.size()) != x.num_frames()) {
    throw DimensionError("targets and features differ in length");
  }
  double j = 0.0;
  for (int t = 0; t < x.num_frames(); ++t)
    for (int c = 0; c < C; ++c) {
      const double e = (y_star[t] == c ? 1.0 : 0.0) - fw.activations(t, c);
      j += 0.5 * e * e;
    }
  return j;
}

inline RnnGradients rnn_baseline_grads(const Matrix& w_u, const Matrix& w_p,
                                       const FeatureSequence& x, std::span<const int> y_star,
                                       RnnGradient mode = RnnGradient::kLiteral) {
  const RnnForward fw = rnn_baseline_forward(w_u, w_p, x);
  const int T = x.num_frames();
  const int C = static_cast<int>(w_u.rows());
  const int F = x.feature_dim();
  if (static_cast<int>(y_star.size()) != T) {
    throw DimensionError("targets and features differ in length");
  }
  check_labels(y_star, C);

  RnnGradients g{Matrix(C, F, 0.0), Matrix(C, C, 0.0)};
  for (int t = 0; t < T; ++t) {
    for (int c = 0; c < C; ++c) {
      const double a = fw.activations(t, c);
      const double e = (y_star[t] == c ? 1.0 : 0.0) - a;
      const double delta = mode == RnnGradient::kLiteral ? e : -e * a * (1.0 - a);
      for (int f = 0; f < F; ++f) g.grad_u(c, f) += delta * x(t, f);
      if (t > 0) g.grad_p(fw.labels[t - 1], c) += delta;
    }
  }
  return g;
}

}  // namespace semiseg
