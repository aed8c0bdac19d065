#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "semiseg/core.hpp"

namespace semiseg {

/// How a segment's frame scores are pooled.
///   kSum:           A[prev][y] + sum_t s(t, y)
///   kMeanPlusPrior: prior[y] + A[prev][y] + mean_t s(t, y)
enum class SegmentScoring { kSum, kMeanPlusPrior };

/// Per-segment duration potential w . gamma(d), with gamma(d) = [d] (discrete)
/// or [d, d^2] (quadratic).
struct DurationFeature {
  enum class Kind { kNone, kDiscrete, kQuadratic };

  Kind kind = Kind::kNone;
  std::vector<double> weights;

  static DurationFeature none() { return {}; }
  static DurationFeature discrete(double w) { return {Kind::kDiscrete, {w}}; }
  static DurationFeature quadratic(double w_linear, double w_square) {
    return {Kind::kQuadratic, {w_linear, w_square}};
  }

  void validate() const {
    const std::size_t expected = kind == Kind::kNone ? 0 : kind == Kind::kDiscrete ? 1 : 2;
    if (weights.size() != expected) {
      throw InvalidArgument("duration feature expects " + std::to_string(expected) +
                            " weight(s), got " + std::to_string(weights.size()));
    }
    for (double w : weights)
      if (!std::isfinite(w)) throw InvalidArgument("duration weight is not finite");
  }

  double score(int d) const {
    switch (kind) {
      case Kind::kNone:
        return 0.0;
      case Kind::kDiscrete:
        return weights[0] * d;
      case Kind::kQuadratic:
        return weights[0] * d + weights[1] * static_cast<double>(d) * d;
    }
    return 0.0;
  }
};

/// Whether adjacent segments may share a label. kStrict is the default for
/// every decoder; kAllowRepeats scores a repeated label with A[c][c].
enum class Adjacency { kStrict, kAllowRepeats };

// ---------------------------------------------------------------------------
// Energy
// ---------------------------------------------------------------------------

/// Total score of a strict segmentation. The first segment has no incoming
/// transition term. Returns kForbidden if any transition used is forbidden.
inline double segment_energy(const ScoreMatrix& scores, const Segmentation& seg,
                             const TransitionModel& model,
                             SegmentScoring scoring = SegmentScoring::kSum,
                             const DurationFeature& duration = {}) {
  duration.validate();
  if (seg.total_frames() != scores.num_frames()) {
    throw DimensionError("segmentation covers " + std::to_string(seg.total_frames()) +
                         " frames, scores have " + std::to_string(scores.num_frames()));
  }
  if (model.num_classes() != scores.num_classes()) {
    throw DimensionError("transition model and scores disagree on class count");
  }
  if (seg.max_label() >= scores.num_classes()) {
    throw DimensionError("segment label outside the score matrix classes");
  }
  if (!seg.is_strict()) throw InvalidArgument("segmentation has adjacent equal labels");

  double energy = 0.0;
  for (std::size_t j = 0; j < seg.size(); ++j) {
    const Segment& s = seg[j];
    double pooled = 0.0;
    for (int t = s.start; t < s.end(); ++t) pooled += scores(t, s.label);
    double f = 0.0;
    if (j > 0) {
      const double a = model.transition(seg[j - 1].label, s.label);
      if (is_forbidden(a)) return kForbidden;
      f += a;
    }
    if (scoring == SegmentScoring::kMeanPlusPrior) {
      const double p = model.prior(s.label);
      if (is_forbidden(p)) return kForbidden;
      f += p + pooled / s.duration;
    } else {
      f += pooled;
    }
    energy += f + duration.score(s.duration);
  }
  return energy;
}

// ---------------------------------------------------------------------------
// Transition estimation
// ---------------------------------------------------------------------------

/// Log transition probabilities and log class priors from segment counts with
/// additive smoothing. Self-transitions are forbidden.
inline TransitionModel estimate_transitions(const std::vector<Segmentation>& train,
                                            int num_classes, double epsilon = 1e-2) {
  if (num_classes < 2) throw InvalidArgument("need at least two classes");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw InvalidArgument("smoothing epsilon must be finite and non-negative");
  }
  Matrix counts(num_classes, num_classes, 0.0);
  std::vector<double> seg_counts(num_classes, 0.0);
  for (const auto& seg : train) {
    if (!seg.is_strict()) throw InvalidArgument("training segmentation is not strict");
    if (seg.max_label() >= num_classes) throw InvalidArgument("training label out of range");
    for (std::size_t j = 0; j < seg.size(); ++j) {
      seg_counts[seg[j].label] += 1.0;
      if (j > 0) counts(seg[j - 1].label, seg[j].label) += 1.0;
    }
  }

  auto log_ratio = [](double num, double den) {
    return num > 0.0 && den > 0.0 ? std::log(num / den) : kForbidden;
  };

  Matrix log_a(num_classes, num_classes, kForbidden);
  for (int a = 0; a < num_classes; ++a) {
    double total = 0.0;
    for (int b = 0; b < num_classes; ++b)
      if (b != a) total += counts(a, b) + epsilon;
    for (int b = 0; b < num_classes; ++b)
      if (b != a) log_a(a, b) = log_ratio(counts(a, b) + epsilon, total);
  }

  double total = 0.0;
  for (double c : seg_counts) total += c + epsilon;
  std::vector<double> log_prior(num_classes);
  for (int c = 0; c < num_classes; ++c) log_prior[c] = log_ratio(seg_counts[c] + epsilon, total);
  return TransitionModel(std::move(log_a), std::move(log_prior));
}

// ---------------------------------------------------------------------------
// Decoding
// ---------------------------------------------------------------------------

struct DecodeResult {
  Segmentation segmentation;
  double energy = kUnreachable;
};

struct ConstrainedDecodeResult {
  Segmentation segmentation;
  double energy = kUnreachable;
  ScoreTable table;
};

namespace detail {

inline void check_decode_inputs(const ScoreMatrix& scores, const TransitionModel& model,
                                const DurationFeature& duration) {
  duration.validate();
  if (model.num_classes() != scores.num_classes()) {
    throw DimensionError("transition model has " + std::to_string(model.num_classes()) +
                         " classes, scores have " + std::to_string(scores.num_classes()));
  }
}

/// Per-class cumulative sums: sum of s(t, c) for t in [start, end).
class ColumnSums {
 public:
  explicit ColumnSums(const ScoreMatrix& scores)
      : classes_(scores.num_classes()),
        sums_((static_cast<std::size_t>(scores.num_frames()) + 1) * classes_, 0.0) {
    for (int t = 0; t < scores.num_frames(); ++t)
      for (int c = 0; c < classes_; ++c)
        sums_[(t + 1) * classes_ + c] = sums_[t * classes_ + c] + scores(t, c);
  }
  double range(int c, int start, int end) const {
    return sums_[static_cast<std::size_t>(end) * classes_ + c] -
           sums_[static_cast<std::size_t>(start) * classes_ + c];
  }

 private:
  int classes_;
  std::vector<double> sums_;
};

/// Segment score without the incoming transition term.
inline double segment_body(const ColumnSums& sums, const TransitionModel& model,
                           SegmentScoring scoring, const DurationFeature& duration, int label,
                           int start, int length) {
  const double pooled = sums.range(label, start, start + length);
  double f = duration.score(length);
  if (scoring == SegmentScoring::kMeanPlusPrior) {
    f += model.prior(label) + pooled / length;
  } else {
    f += pooled;
  }
  return f;
}

}  // namespace detail

/// Classic Segmental Viterbi: best strict segmentation whose durations are all
/// at most `max_duration`. O(T D C^2).
/// With Adjacency::kAllowRepeats a segment may follow one of the same label.
inline DecodeResult segmental_viterbi(const ScoreMatrix& scores, const TransitionModel& model,
                                      int max_duration,
                                      SegmentScoring scoring = SegmentScoring::kSum,
                                      const DurationFeature& duration = {},
                                      Adjacency adjacency = Adjacency::kStrict) {
  detail::check_decode_inputs(scores, model, duration);
  const int T = scores.num_frames();
  const int C = scores.num_classes();
  if (max_duration < 1 || max_duration > T) {
    throw InvalidArgument("max duration must lie in [1, T]");
  }
  const detail::ColumnSums sums(scores);

  // best[t][c]: best labeling of frames [0, t) whose last segment has class c.
  std::vector<double> best(static_cast<std::size_t>(T + 1) * C, kUnreachable);
  std::vector<int> back_len(best.size(), 0);
  std::vector<int> back_prev(best.size(), Backpointer::kNone);
  const Matrix& A = model.log_transition();

  for (int t = 1; t <= T; ++t) {
    const int max_d = std::min(max_duration, t);
    for (int c = 0; c < C; ++c) {
      double cell = kUnreachable;
      int cell_len = 0;
      int cell_prev = Backpointer::kNone;
      for (int d = 1; d <= max_d; ++d) {
        const int start = t - d;
        const double body = detail::segment_body(sums, model, scoring, duration, c, start, d);
        if (start == 0) {
          if (body > cell) {
            cell = body;
            cell_len = d;
            cell_prev = Backpointer::kNone;
          }
          continue;
        }
        const double* prev_row = &best[static_cast<std::size_t>(start) * C];
        for (int cp = 0; cp < C; ++cp) {
          if (cp == c && adjacency == Adjacency::kStrict) continue;
          const double cand = prev_row[cp] + A(cp, c) + body;
          if (cand > cell) {
            cell = cand;
            cell_len = d;
            cell_prev = cp;
          }
        }
      }
      const std::size_t idx = static_cast<std::size_t>(t) * C + c;
      best[idx] = cell;
      back_len[idx] = cell_len;
      back_prev[idx] = cell_prev;
    }
  }

  int end_class = -1;
  double energy = kUnreachable;
  for (int c = 0; c < C; ++c) {
    const double v = best[static_cast<std::size_t>(T) * C + c];
    if (v > energy) {
      energy = v;
      end_class = c;
    }
  }
  if (end_class < 0) {
    throw InfeasibleError("no segmentation with durations <= " + std::to_string(max_duration) +
                          " avoids forbidden transitions");
  }

  std::vector<Segment> segs;
  int t = T;
  int c = end_class;
  while (t > 0) {
    const std::size_t idx = static_cast<std::size_t>(t) * C + c;
    const int d = back_len[idx];
    segs.push_back({c, t - d, d});
    c = back_prev[idx];
    t -= d;
  }
  std::reverse(segs.begin(), segs.end());
  return {Segmentation(std::move(segs), T), energy};
}

namespace detail {

inline Segmentation backtrack_constrained(const ScoreTable& table, int k, int c) {
  std::vector<Segment> segs;
  int t = table.num_frames() - 1;
  int end = table.num_frames();
  while (t >= 0) {
    const Backpointer& bp = table.back(k, t, c);
    if (bp.segment_start >= 0) {
      // Closed-segment table: one step per segment.
      segs.push_back({c, bp.segment_start, end - bp.segment_start});
      end = bp.segment_start;
      t = bp.segment_start - 1;
      c = bp.prev_class;
      --k;
      continue;
    }
    if (bp.prev_class == Backpointer::kStay) {
      --t;
      continue;
    }
    segs.push_back({c, t, end - t});
    end = t;
    c = bp.prev_class;
    --t;
    --k;
  }
  std::reverse(segs.begin(), segs.end());
  return Segmentation(std::move(segs), table.num_frames());
}

/// Frame-additive recursion: each cell either stays in its segment or opens a
/// new one from segment k-1. O(K T C^2).
inline void forward_additive(const ScoreMatrix& scores, const TransitionModel& model,
                             double per_frame_bonus, ScoreTable& table) {
  const int K = table.max_segments();
  const int T = table.num_frames();
  const int C = table.num_classes();
  const Matrix& A = model.log_transition();

  for (int c = 0; c < C; ++c) {
    table.value(1, 0, c) = scores(0, c) + per_frame_bonus;
    table.back(1, 0, c) = {Backpointer::kNone, true, -1};
  }
  for (int t = 1; t < T; ++t) {
    for (int c = 0; c < C; ++c) {
      table.value(1, t, c) = table.value(1, t - 1, c) + scores(t, c) + per_frame_bonus;
      table.back(1, t, c) = {Backpointer::kStay, false, -1};
    }
  }

  for (int k = 2; k <= K; ++k) {
    for (int t = k - 1; t < T; ++t) {
      for (int c = 0; c < C; ++c) {
        const double v_cur = table.value(k, t - 1, c);
        double v_prev = kUnreachable;
        int arg_prev = Backpointer::kNone;
        for (int cp = 0; cp < C; ++cp) {
          if (cp == c) continue;
          const double cand = table.value(k - 1, t - 1, cp) + A(cp, c);
          if (cand > v_prev) {
            v_prev = cand;
            arg_prev = cp;
          }
        }
        const double s = scores(t, c) + per_frame_bonus;
        if (v_cur >= v_prev) {
          if (!is_unreachable(v_cur)) {
            table.value(k, t, c) = v_cur + s;
            table.back(k, t, c) = {Backpointer::kStay, false, -1};
          }
        } else {
          table.value(k, t, c) = v_prev + s;
          table.back(k, t, c) = {arg_prev, true, -1};
        }
      }
    }
  }
}

/// Closed-segment recursion for segment scores that are not frame-additive
/// (mean pooling, quadratic duration): cell (k, t, c) is the best labeling
/// whose k-th segment has class c and ends exactly at t. O(K T^2 C + K T C^2).
inline void forward_closed(const ScoreMatrix& scores, const TransitionModel& model,
                           SegmentScoring scoring, const DurationFeature& duration,
                           ScoreTable& table) {
  const int K = table.max_segments();
  const int T = table.num_frames();
  const int C = table.num_classes();
  const Matrix& A = model.log_transition();
  const ColumnSums sums(scores);

  // incoming[s * C + c]: best score of k-1 segments ending at s-1 followed by a
  // transition into c.
  std::vector<double> incoming(static_cast<std::size_t>(T) * C, kUnreachable);
  std::vector<int> incoming_arg(incoming.size(), Backpointer::kNone);

  for (int k = 1; k <= K; ++k) {
    if (k >= 2) {
      std::fill(incoming.begin(), incoming.end(), kUnreachable);
      for (int s = k - 1; s < T; ++s) {
        for (int c = 0; c < C; ++c) {
          double best = kUnreachable;
          int arg = Backpointer::kNone;
          for (int cp = 0; cp < C; ++cp) {
            if (cp == c) continue;
            const double cand = table.value(k - 1, s - 1, cp) + A(cp, c);
            if (cand > best) {
              best = cand;
              arg = cp;
            }
          }
          incoming[static_cast<std::size_t>(s) * C + c] = best;
          incoming_arg[static_cast<std::size_t>(s) * C + c] = arg;
        }
      }
    }
    for (int t = k - 1; t < T; ++t) {
      for (int c = 0; c < C; ++c) {
        double cell = kUnreachable;
        Backpointer bp;
        const int first_start = k == 1 ? 0 : k - 1;
        const int last_start = k == 1 ? 0 : t;
        for (int s = first_start; s <= last_start; ++s) {
          const double in = k == 1 ? 0.0 : incoming[static_cast<std::size_t>(s) * C + c];
          if (is_unreachable(in)) continue;
          const double cand = in + segment_body(sums, model, scoring, duration, c, s, t - s + 1);
          if (cand > cell) {
            cell = cand;
            bp = {k == 1 ? Backpointer::kNone
                         : incoming_arg[static_cast<std::size_t>(s) * C + c],
                  true, s};
          }
        }
        table.value(k, t, c) = cell;
        table.back(k, t, c) = bp;
      }
    }
  }
}

}  // namespace detail

/// Best strict segmentation with at most `max_segments` segments.
///
/// With sum pooling and a frame-additive duration term (none or discrete) this
/// runs the O(K T C^2) stay-or-switch recursion over (k, t, c). Any other
/// scoring falls back to an exact recursion over closed segments.
/// On equal scores the decoder prefers staying over switching, then the lower
/// previous class; among final cells it prefers fewer segments, then the
/// lower class.
inline ConstrainedDecodeResult constrained_decode(const ScoreMatrix& scores,
                                                  const TransitionModel& model, int max_segments,
                                                  SegmentScoring scoring = SegmentScoring::kSum,
                                                  const DurationFeature& duration = {}) {
  detail::check_decode_inputs(scores, model, duration);
  const int T = scores.num_frames();
  const int C = scores.num_classes();
  if (max_segments < 1 || max_segments > T) {
    throw InvalidArgument("max segment count must lie in [1, T]");
  }

  ScoreTable table(max_segments, T, C);
  const bool additive = scoring == SegmentScoring::kSum &&
                        duration.kind != DurationFeature::Kind::kQuadratic;
  if (additive) {
    const double bonus =
        duration.kind == DurationFeature::Kind::kDiscrete ? duration.weights[0] : 0.0;
    detail::forward_additive(scores, model, bonus, table);
  } else {
    detail::forward_closed(scores, model, scoring, duration, table);
  }

  double energy = kUnreachable;
  int best_k = 0;
  int best_c = -1;
  for (int k = 1; k <= max_segments; ++k) {
    for (int c = 0; c < C; ++c) {
      const double v = table.value(k, T - 1, c);
      if (v > energy) {
        energy = v;
        best_k = k;
        best_c = c;
      }
    }
  }
  if (best_c < 0) {
    throw InfeasibleError("no segmentation with at most " + std::to_string(max_segments) +
                          " segments avoids forbidden transitions");
  }
  Segmentation seg = detail::backtrack_constrained(table, best_k, best_c);
  return {std::move(seg), energy, std::move(table)};
}

// ---------------------------------------------------------------------------
// Brute force oracle
// ---------------------------------------------------------------------------

struct MaxDuration {
  int frames;
};
struct MaxSegments {
  int count;
};
using DecodeConstraint = std::variant<MaxDuration, MaxSegments>;

inline constexpr int kBruteForceMaxFrames = 14;

/// Exhaustive search over all strict segmentations satisfying the constraint.
/// Ties go to fewer segments, then the lexicographically smallest per-frame
/// label sequence. Refuses T > 14.
inline DecodeResult brute_force_decode(const ScoreMatrix& scores, const TransitionModel& model,
                                       DecodeConstraint constraint,
                                       SegmentScoring scoring = SegmentScoring::kSum,
                                       const DurationFeature& duration = {},
                                       Adjacency adjacency = Adjacency::kStrict) {
  detail::check_decode_inputs(scores, model, duration);
  const int T = scores.num_frames();
  const int C = scores.num_classes();
  if (T > kBruteForceMaxFrames) {
    throw InvalidArgument("brute force decoding refuses T > " +
                          std::to_string(kBruteForceMaxFrames));
  }
  int max_d = T;
  int max_k = T;
  if (const auto* d = std::get_if<MaxDuration>(&constraint)) max_d = d->frames;
  if (const auto* k = std::get_if<MaxSegments>(&constraint)) max_k = k->count;
  if (max_d < 1 || max_k < 1) throw InvalidArgument("constraint bound must be positive");

  const detail::ColumnSums sums(scores);
  std::vector<Segment> current;
  std::vector<Segment> best_segs;
  double best_energy = kUnreachable;

  auto better = [&](double e) {
    if (e > best_energy) return true;
    if (e < best_energy || best_segs.empty()) return false;
    if (current.size() != best_segs.size()) return current.size() < best_segs.size();
    const auto a = segments_to_labels(Segmentation(current, T));
    const auto b = segments_to_labels(Segmentation(best_segs, T));
    return a < b;
  };

  std::function<void(int, double)> extend = [&](int start, double acc) {
    if (start == T) {
      if (better(acc)) {
        best_energy = acc;
        best_segs = current;
      }
      return;
    }
    if (static_cast<int>(current.size()) == max_k) return;
    const int prev = current.empty() ? -1 : current.back().label;
    for (int c = 0; c < C; ++c) {
      if (c == prev && adjacency == Adjacency::kStrict) continue;
      const double a = prev < 0 ? 0.0 : model.transition(prev, c);
      if (is_forbidden(a)) continue;
      for (int d = 1; d <= std::min(max_d, T - start); ++d) {
        const double f = a + detail::segment_body(sums, model, scoring, duration, c, start, d);
        current.push_back({c, start, d});
        extend(start + d, acc + f);
        current.pop_back();
      }
    }
  };
  extend(0, 0.0);

  if (best_segs.empty()) throw InfeasibleError("no feasible segmentation");
  return {Segmentation(std::move(best_segs), T), best_energy};
}

/// Ratio of Segmental Viterbi cost O(T D C^2) to constrained cost O(K T C^2).
inline double theoretical_speedup(double max_duration, double max_segments) {
  if (max_segments < 1) throw InvalidArgument("segment bound must be at least 1");
  return max_duration / max_segments;
}

}  // namespace semiseg
