#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <initializer_list>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "semiseg/core.hpp"

namespace semiseg {

// ---------------------------------------------------------------------------
// Potentials
// ---------------------------------------------------------------------------

enum class Potential {
  kData,
  kPairClass,
  kPairData,
  kClassPrior,
  kBoundaryStart,
  kBoundaryEnd,
  kTemporalPrior,
};

inline constexpr std::array<Potential, 7> kAllPotentials = {
    Potential::kData,          Potential::kPairClass,   Potential::kPairData,
    Potential::kClassPrior,    Potential::kBoundaryStart, Potential::kBoundaryEnd,
    Potential::kTemporalPrior,
};

inline std::string_view potential_name(Potential p) {
  switch (p) {
    case Potential::kData: return "DATA";
    case Potential::kPairClass: return "PAIR_CLASS";
    case Potential::kPairData: return "PAIR_DATA";
    case Potential::kClassPrior: return "CLASS_PRIOR";
    case Potential::kBoundaryStart: return "BOUNDARY_START";
    case Potential::kBoundaryEnd: return "BOUNDARY_END";
    case Potential::kTemporalPrior: return "TEMPORAL_PRIOR";
  }
  return "";
}

/// Case-insensitive; accepts "pair_class" and "pair-class".
inline std::optional<Potential> parse_potential(std::string_view name) {
  std::string norm;
  for (char ch : name) norm += ch == '-' ? '_' : static_cast<char>(std::toupper(ch));
  for (Potential p : kAllPotentials)
    if (potential_name(p) == norm) return p;
  return std::nullopt;
}

class PotentialSet {
 public:
  PotentialSet() = default;
  PotentialSet(std::initializer_list<Potential> ps) {
    for (Potential p : ps) insert(p);
  }
  void insert(Potential p) { bits_ |= bit(p); }
  bool contains(Potential p) const { return (bits_ & bit(p)) != 0; }
  bool empty() const { return bits_ == 0; }
  friend bool operator==(const PotentialSet&, const PotentialSet&) = default;

 private:
  static unsigned bit(Potential p) { return 1u << static_cast<unsigned>(p); }
  unsigned bits_ = 0;
};

struct PotentialConfig {
  PotentialSet enabled;
  int num_classes = 2;
  int feature_dim = 1;
  /// Skip length d for the pairwise class term.
  int skip = 1;
  /// Skip length for the pairwise data term; defaults to `skip`.
  std::optional<int> pair_data_skip;
  /// Canonical sequence length T' for the temporal prior.
  int canonical_length = 50;
  /// Window length for both boundary priors.
  int boundary_window = 1;

  bool has(Potential p) const { return enabled.contains(p); }
  int data_skip() const { return pair_data_skip.value_or(skip); }
  bool has_pairwise() const { return has(Potential::kPairClass) || has(Potential::kPairData); }

  void validate() const {
    if (num_classes < 2) throw InvalidArgument("need at least two classes");
    if (feature_dim < 1) throw InvalidArgument("feature dimension must be positive");
    if (skip < 1 || data_skip() < 1) throw InvalidArgument("skip length must be >= 1");
    if (canonical_length < 1) throw InvalidArgument("canonical length must be >= 1");
    if (boundary_window < 1) throw InvalidArgument("boundary window must be >= 1");
  }
};

/// Per-frame feature vectors X (T x F), all finite.
class FeatureSequence {
 public:
  explicit FeatureSequence(Matrix x) : x_(std::move(x)) {
    if (x_.rows() < 1 || x_.cols() < 1) throw InvalidArgument("feature sequence is empty");
    if (!x_.all_finite()) throw InvalidArgument("feature sequence has non-finite entries");
  }
  static FeatureSequence from_rows(const std::vector<std::vector<double>>& rows) {
    return FeatureSequence(Matrix::from_rows(rows));
  }

  int num_frames() const { return static_cast<int>(x_.rows()); }
  int feature_dim() const { return static_cast<int>(x_.cols()); }
  std::span<const double> frame(int t) const { return x_.row(t); }
  double operator()(int t, int f) const { return x_(t, f); }
  const Matrix& matrix() const { return x_; }

 private:
  Matrix x_;
};

// ---------------------------------------------------------------------------
// WeightSet
// ---------------------------------------------------------------------------

/// One weight block per enabled potential, each viewed as a matrix:
///   DATA C x F, PAIR_CLASS C x C, PAIR_DATA C x (C F) with column b F + f,
///   CLASS_PRIOR / BOUNDARY_START / BOUNDARY_END C x 1, TEMPORAL_PRIOR T' x C.
/// Disabled potentials have empty blocks. Joint feature maps share the layout.
class WeightSet {
 public:
  WeightSet() = default;

  static WeightSet zeros(const PotentialConfig& cfg) {
    cfg.validate();
    WeightSet w;
    const std::size_t C = cfg.num_classes;
    const std::size_t F = cfg.feature_dim;
    for (Potential p : kAllPotentials) {
      if (!cfg.has(p)) continue;
      std::size_t rows = 0, cols = 0;
      switch (p) {
        case Potential::kData: rows = C; cols = F; break;
        case Potential::kPairClass: rows = C; cols = C; break;
        case Potential::kPairData: rows = C; cols = C * F; break;
        case Potential::kClassPrior:
        case Potential::kBoundaryStart:
        case Potential::kBoundaryEnd: rows = C; cols = 1; break;
        case Potential::kTemporalPrior: rows = cfg.canonical_length; cols = C; break;
      }
      w.blocks_[index(p)] = Matrix(rows, cols, 0.0);
    }
    return w;
  }

  bool has(Potential p) const { return !blocks_[index(p)].empty(); }
  Matrix& block(Potential p) { return blocks_[index(p)]; }
  const Matrix& block(Potential p) const { return blocks_[index(p)]; }

  bool same_shape(const WeightSet& other) const {
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      if (blocks_[i].rows() != other.blocks_[i].rows() ||
          blocks_[i].cols() != other.blocks_[i].cols())
        return false;
    }
    return true;
  }

  double dot(const WeightSet& other) const {
    require_same_shape(other);
    double acc = 0.0;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      auto a = blocks_[i].data();
      auto b = other.blocks_[i].data();
      for (std::size_t j = 0; j < a.size(); ++j) acc += a[j] * b[j];
    }
    return acc;
  }

  /// this += alpha * other
  WeightSet& axpy(double alpha, const WeightSet& other) {
    require_same_shape(other);
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      auto a = blocks_[i].data();
      auto b = other.blocks_[i].data();
      for (std::size_t j = 0; j < a.size(); ++j) a[j] += alpha * b[j];
    }
    return *this;
  }

  WeightSet& scale(double alpha) {
    for (auto& m : blocks_)
      for (double& v : m.data()) v *= alpha;
    return *this;
  }

  /// Applies `fn(value&)` to every coordinate.
  template <typename Fn>
  void for_each(Fn&& fn) {
    for (auto& m : blocks_)
      for (double& v : m.data()) fn(v);
  }
  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (const auto& m : blocks_)
      for (double v : m.data()) fn(v);
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& m : blocks_) n += m.data().size();
    return n;
  }

  bool all_finite() const {
    for (const auto& m : blocks_)
      if (!m.all_finite()) return false;
    return true;
  }

  friend bool operator==(const WeightSet&, const WeightSet&) = default;

 private:
  static std::size_t index(Potential p) { return static_cast<std::size_t>(p); }
  void require_same_shape(const WeightSet& other) const {
    if (!same_shape(other)) throw DimensionError("weight sets have different shapes");
  }

  std::array<Matrix, kAllPotentials.size()> blocks_;
};

/// Sufficient statistics share the weight layout.
using FeatureMap = WeightSet;

namespace detail {

inline int canonical_index(int t, int num_frames, int canonical_length) {
  const long long idx = static_cast<long long>(t) * canonical_length / num_frames;
  return static_cast<int>(std::clamp<long long>(idx, 0, canonical_length - 1));
}

inline void check_framewise_inputs(const FeatureSequence& x, const PotentialConfig& cfg) {
  cfg.validate();
  if (x.feature_dim() != cfg.feature_dim) {
    throw DimensionError("features have dimension " + std::to_string(x.feature_dim()) +
                         ", config expects " + std::to_string(cfg.feature_dim));
  }
  const int T = x.num_frames();
  if (cfg.has(Potential::kPairClass) && T <= cfg.skip) {
    throw InvalidArgument("sequence length must exceed the pairwise skip length");
  }
  if (cfg.has(Potential::kPairData) && T <= cfg.data_skip()) {
    throw InvalidArgument("sequence length must exceed the pairwise data skip length");
  }
}

inline void check_labeled_inputs(const FeatureSequence& x, std::span<const int> y,
                                 const PotentialConfig& cfg) {
  check_framewise_inputs(x, cfg);
  if (static_cast<int>(y.size()) != x.num_frames()) {
    throw DimensionError("label and feature sequences differ in length");
  }
  check_labels(y, cfg.num_classes);
}

inline bool in_start_window(int t, const PotentialConfig& cfg) { return t < cfg.boundary_window; }
inline bool in_end_window(int t, int T, const PotentialConfig& cfg) {
  return t >= T - cfg.boundary_window;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Joint features and energy
// ---------------------------------------------------------------------------

/// Accumulates each enabled potential's sufficient statistics for (X, Y).
inline FeatureMap joint_features(const FeatureSequence& x, std::span<const int> y,
                                 const PotentialConfig& cfg) {
  detail::check_labeled_inputs(x, y, cfg);
  FeatureMap psi = FeatureMap::zeros(cfg);
  const int T = x.num_frames();
  const int F = cfg.feature_dim;

  for (int t = 0; t < T; ++t) {
    const int c = y[t];
    if (cfg.has(Potential::kData)) {
      Matrix& m = psi.block(Potential::kData);
      for (int f = 0; f < F; ++f) m(c, f) += x(t, f);
    }
    if (cfg.has(Potential::kClassPrior)) psi.block(Potential::kClassPrior)(c, 0) += 1.0;
    if (cfg.has(Potential::kBoundaryStart) && detail::in_start_window(t, cfg))
      psi.block(Potential::kBoundaryStart)(c, 0) += 1.0;
    if (cfg.has(Potential::kBoundaryEnd) && detail::in_end_window(t, T, cfg))
      psi.block(Potential::kBoundaryEnd)(c, 0) += 1.0;
    if (cfg.has(Potential::kTemporalPrior)) {
      psi.block(Potential::kTemporalPrior)(detail::canonical_index(t, T, cfg.canonical_length),
                                           c) += 1.0;
    }
  }
  if (cfg.has(Potential::kPairClass)) {
    Matrix& m = psi.block(Potential::kPairClass);
    for (int t = cfg.skip; t < T; ++t) m(y[t - cfg.skip], y[t]) += 1.0;
  }
  if (cfg.has(Potential::kPairData)) {
    Matrix& m = psi.block(Potential::kPairData);
    const int d = cfg.data_skip();
    for (int t = d; t < T; ++t) {
      const int a = y[t - d];
      const int b = y[t];
      for (int f = 0; f < F; ++f) m(a, b * F + f) += x(t, f) - x(t - d, f);
    }
  }
  return psi;
}

/// Energy summed frame by frame, independent of joint_features.
inline double framewise_energy(const WeightSet& w, const FeatureSequence& x,
                               std::span<const int> y, const PotentialConfig& cfg) {
  detail::check_labeled_inputs(x, y, cfg);
  if (!w.same_shape(WeightSet::zeros(cfg))) {
    throw DimensionError("weight set shape does not match the potential config");
  }
  const int T = x.num_frames();
  const int F = cfg.feature_dim;
  const int d_pc = cfg.skip;
  const int d_pd = cfg.data_skip();
  double energy = 0.0;
  for (int t = 0; t < T; ++t) {
    const int c = y[t];
    double e = 0.0;
    if (cfg.has(Potential::kData)) {
      const auto wc = w.block(Potential::kData).row(c);
      for (int f = 0; f < F; ++f) e += wc[f] * x(t, f);
    }
    if (cfg.has(Potential::kClassPrior)) e += w.block(Potential::kClassPrior)(c, 0);
    if (cfg.has(Potential::kBoundaryStart) && detail::in_start_window(t, cfg))
      e += w.block(Potential::kBoundaryStart)(c, 0);
    if (cfg.has(Potential::kBoundaryEnd) && detail::in_end_window(t, T, cfg))
      e += w.block(Potential::kBoundaryEnd)(c, 0);
    if (cfg.has(Potential::kTemporalPrior)) {
      e += w.block(Potential::kTemporalPrior)(
          detail::canonical_index(t, T, cfg.canonical_length), c);
    }
    if (cfg.has(Potential::kPairClass) && t >= d_pc)
      e += w.block(Potential::kPairClass)(y[t - d_pc], c);
    if (cfg.has(Potential::kPairData) && t >= d_pd) {
      const Matrix& m = w.block(Potential::kPairData);
      const int a = y[t - d_pd];
      for (int f = 0; f < F; ++f) e += m(a, c * F + f) * (x(t, f) - x(t - d_pd, f));
    }
    energy += e;
  }
  return energy;
}

// ---------------------------------------------------------------------------
// Decoding
// ---------------------------------------------------------------------------

enum class LossKind { kHamming, kOverlap };

/// Ground truth and loss used to augment decoding scores.
struct LossAugmentation {
  LabelSequence truth;
  LossKind kind = LossKind::kHamming;
};

/// Per-frame loss of predicting any label other than truth[t]. Both losses
/// decompose over frames: Hamming costs 1, overlap costs 1 / |segment|.
inline std::vector<double> frame_loss_weights(std::span<const int> truth, LossKind kind) {
  std::vector<double> out(truth.size(), 1.0);
  if (kind == LossKind::kOverlap) {
    const Segmentation seg = labels_to_segments(truth);
    for (const Segment& s : seg.segments())
      for (int t = s.start; t < s.end(); ++t) out[t] = 1.0 / s.duration;
  }
  return out;
}

/// Exact argmax_Y of framewise energy (plus loss when augmented).
///
/// Unary potentials are summed per frame; the pairwise class and data terms
/// share one skip length d and couple frame t only with t - d, so each residue
/// chain {r, r + d, r + 2d, ...} is an independent Viterbi problem.
/// Ties resolve to the lower class index.
inline LabelSequence framewise_decode(const WeightSet& w, const FeatureSequence& x,
                                      const PotentialConfig& cfg,
                                      const std::optional<LossAugmentation>& augment = {}) {
  detail::check_framewise_inputs(x, cfg);
  if (!w.same_shape(WeightSet::zeros(cfg))) {
    throw DimensionError("weight set shape does not match the potential config");
  }
  if (cfg.has(Potential::kPairClass) && cfg.has(Potential::kPairData) &&
      cfg.skip != cfg.data_skip()) {
    throw UnsupportedConfig("pairwise potentials with different skip lengths have no exact decoder");
  }
  const int T = x.num_frames();
  const int C = cfg.num_classes;
  const int F = cfg.feature_dim;

  Matrix unary(T, C, 0.0);
  for (int t = 0; t < T; ++t) {
    for (int c = 0; c < C; ++c) {
      double u = 0.0;
      if (cfg.has(Potential::kData)) {
        const auto wc = w.block(Potential::kData).row(c);
        for (int f = 0; f < F; ++f) u += wc[f] * x(t, f);
      }
      if (cfg.has(Potential::kClassPrior)) u += w.block(Potential::kClassPrior)(c, 0);
      if (cfg.has(Potential::kBoundaryStart) && detail::in_start_window(t, cfg))
        u += w.block(Potential::kBoundaryStart)(c, 0);
      if (cfg.has(Potential::kBoundaryEnd) && detail::in_end_window(t, T, cfg))
        u += w.block(Potential::kBoundaryEnd)(c, 0);
      if (cfg.has(Potential::kTemporalPrior))
        u += w.block(Potential::kTemporalPrior)(
            detail::canonical_index(t, T, cfg.canonical_length), c);
      unary(t, c) = u;
    }
  }
  if (augment) {
    if (static_cast<int>(augment->truth.size()) != T) {
      throw DimensionError("loss augmentation truth has the wrong length");
    }
    check_labels(augment->truth, C);
    const auto loss = frame_loss_weights(augment->truth, augment->kind);
    for (int t = 0; t < T; ++t)
      for (int c = 0; c < C; ++c)
        if (c != augment->truth[t]) unary(t, c) += loss[t];
  }

  LabelSequence y(T, 0);
  if (!cfg.has_pairwise()) {
    for (int t = 0; t < T; ++t) {
      const auto row = unary.row(t);
      y[t] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return y;
  }

  const int d = cfg.has(Potential::kPairClass) ? cfg.skip : cfg.data_skip();
  auto pair_score = [&](int t, int a, int b) {
    double s = 0.0;
    if (cfg.has(Potential::kPairClass)) s += w.block(Potential::kPairClass)(a, b);
    if (cfg.has(Potential::kPairData)) {
      const Matrix& m = w.block(Potential::kPairData);
      for (int f = 0; f < F; ++f) s += m(a, b * F + f) * (x(t, f) - x(t - d, f));
    }
    return s;
  };

  std::vector<double> prev(C), cur(C);
  std::vector<int> back;
  for (int r = 0; r < d && r < T; ++r) {
    const int len = (T - 1 - r) / d + 1;
    back.assign(static_cast<std::size_t>(len) * C, 0);
    for (int c = 0; c < C; ++c) prev[c] = unary(r, c);
    for (int i = 1; i < len; ++i) {
      const int t = r + i * d;
      for (int b = 0; b < C; ++b) {
        double best = kUnreachable;
        int arg = 0;
        for (int a = 0; a < C; ++a) {
          const double v = prev[a] + pair_score(t, a, b);
          if (v > best) {
            best = v;
            arg = a;
          }
        }
        cur[b] = best + unary(t, b);
        back[static_cast<std::size_t>(i) * C + b] = arg;
      }
      std::swap(prev, cur);
    }
    int c = static_cast<int>(std::max_element(prev.begin(), prev.end()) - prev.begin());
    for (int i = len - 1; i >= 0; --i) {
      y[r + i * d] = c;
      if (i > 0) c = back[static_cast<std::size_t>(i) * C + c];
    }
  }
  return y;
}

}  // namespace semiseg
