#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace semiseg {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes of two inputs do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An argument violates a documented precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// No labeling satisfies the decoding constraints.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// The requested potential configuration has no exact decoder.
class UnsupportedConfig : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Sentinels
// ---------------------------------------------------------------------------

/// Log-score of a transition that decoding must never take.
inline constexpr double kForbidden = -std::numeric_limits<double>::infinity();
/// Value of a DP cell that no labeling reaches.
inline constexpr double kUnreachable = -std::numeric_limits<double>::infinity();

inline bool is_forbidden(double v) { return v == kForbidden; }
inline bool is_unreachable(double v) { return v == kUnreachable; }

// ---------------------------------------------------------------------------
// Matrix
// ---------------------------------------------------------------------------

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw DimensionError("matrix data size does not match " + std::to_string(rows_) + "x" +
                           std::to_string(cols_));
    }
  }
  /// Builds from nested rows; all rows must have the same length.
  static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.front().size();
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
      if (row.size() != c) throw DimensionError("ragged rows in matrix literal");
      data.insert(data.end(), row.begin(), row.end());
    }
    return Matrix(r, c, std::move(data));
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// ScoreMatrix
// ---------------------------------------------------------------------------

/// Per-frame, per-class scores s(t, c). Immutable, finite, T >= 1, C >= 2.
class ScoreMatrix {
 public:
  explicit ScoreMatrix(Matrix scores) : scores_(std::move(scores)) {
    if (scores_.rows() < 1) throw InvalidArgument("score matrix needs at least one frame");
    if (scores_.cols() < 2) throw InvalidArgument("score matrix needs at least two classes");
    if (!scores_.all_finite()) throw InvalidArgument("score matrix has non-finite entries");
  }
  static ScoreMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    return ScoreMatrix(Matrix::from_rows(rows));
  }

  int num_frames() const { return static_cast<int>(scores_.rows()); }
  int num_classes() const { return static_cast<int>(scores_.cols()); }
  double operator()(int t, int c) const { return scores_(t, c); }
  std::span<const double> frame(int t) const { return scores_.row(t); }
  const Matrix& matrix() const { return scores_; }

 private:
  Matrix scores_;
};

// ---------------------------------------------------------------------------
// Labels and segmentations
// ---------------------------------------------------------------------------

/// One class index per frame.
using LabelSequence = std::vector<int>;

inline void check_labels(std::span<const int> labels, int num_classes) {
  for (std::size_t t = 0; t < labels.size(); ++t) {
    if (labels[t] < 0 || labels[t] >= num_classes) {
      throw InvalidArgument("label " + std::to_string(labels[t]) + " at frame " +
                            std::to_string(t) + " outside [0, " + std::to_string(num_classes) +
                            ")");
    }
  }
}

struct Segment {
  int label = 0;
  int start = 0;
  int duration = 0;

  int end() const { return start + duration; }
  friend bool operator==(const Segment&, const Segment&) = default;
};

/// Contiguous cover of [0, total_frames) by segments with positive durations.
class Segmentation {
 public:
  Segmentation() = default;
  Segmentation(std::vector<Segment> segments, int total_frames)
      : segments_(std::move(segments)), total_frames_(total_frames) {
    if (segments_.empty()) throw InvalidArgument("segmentation has no segments");
    int expected_start = 0;
    for (std::size_t j = 0; j < segments_.size(); ++j) {
      const Segment& s = segments_[j];
      if (s.duration < 1) {
        throw InvalidArgument("segment " + std::to_string(j) + " has non-positive duration");
      }
      if (s.label < 0) throw InvalidArgument("segment " + std::to_string(j) + " has negative label");
      if (s.start != expected_start) {
        throw InvalidArgument("segment " + std::to_string(j) + " starts at " +
                              std::to_string(s.start) + ", expected " +
                              std::to_string(expected_start));
      }
      expected_start = s.end();
    }
    if (expected_start != total_frames_) {
      throw InvalidArgument("segment durations sum to " + std::to_string(expected_start) +
                            ", expected " + std::to_string(total_frames_));
    }
  }
  /// Builds from (label, duration) pairs, deriving start times.
  static Segmentation from_durations(const std::vector<std::pair<int, int>>& label_durations) {
    std::vector<Segment> segs;
    int start = 0;
    for (auto [label, duration] : label_durations) {
      segs.push_back({label, start, duration});
      start += duration;
    }
    return Segmentation(std::move(segs), start);
  }

  const std::vector<Segment>& segments() const { return segments_; }
  std::size_t size() const { return segments_.size(); }
  const Segment& operator[](std::size_t j) const { return segments_[j]; }
  int total_frames() const { return total_frames_; }

  /// True when no two adjacent segments share a label.
  bool is_strict() const {
    for (std::size_t j = 1; j < segments_.size(); ++j)
      if (segments_[j].label == segments_[j - 1].label) return false;
    return true;
  }

  /// Ordered segment labels.
  std::vector<int> labels() const {
    std::vector<int> out;
    out.reserve(segments_.size());
    for (const auto& s : segments_) out.push_back(s.label);
    return out;
  }

  int max_label() const {
    int m = -1;
    for (const auto& s : segments_) m = std::max(m, s.label);
    return m;
  }

  friend bool operator==(const Segmentation&, const Segmentation&) = default;

 private:
  std::vector<Segment> segments_;
  int total_frames_ = 0;
};

/// Run-length encodes a label sequence into a strict segmentation.
inline Segmentation labels_to_segments(std::span<const int> labels) {
  if (labels.empty()) throw InvalidArgument("empty label sequence");
  std::vector<Segment> segs;
  int start = 0;
  for (std::size_t t = 1; t <= labels.size(); ++t) {
    if (t == labels.size() || labels[t] != labels[start]) {
      segs.push_back({labels[start], start, static_cast<int>(t) - start});
      start = static_cast<int>(t);
    }
  }
  return Segmentation(std::move(segs), static_cast<int>(labels.size()));
}

inline LabelSequence segments_to_labels(const Segmentation& seg) {
  LabelSequence out;
  out.reserve(seg.total_frames());
  for (const auto& s : seg.segments()) out.insert(out.end(), s.duration, s.label);
  return out;
}

/// Merges adjacent segments that share a label.
inline Segmentation make_strict(const Segmentation& seg) {
  return labels_to_segments(segments_to_labels(seg));
}

// ---------------------------------------------------------------------------
// TransitionModel
// ---------------------------------------------------------------------------

/// C x C log transition matrix plus per-class log prior. Entries are finite
/// or kForbidden.
class TransitionModel {
 public:
  TransitionModel(Matrix log_transition, std::vector<double> log_prior)
      : log_transition_(std::move(log_transition)), log_prior_(std::move(log_prior)) {
    const std::size_t c = log_prior_.size();
    if (c < 2) throw InvalidArgument("transition model needs at least two classes");
    if (log_transition_.rows() != c || log_transition_.cols() != c) {
      throw DimensionError("transition matrix shape does not match prior length");
    }
    auto ok = [](double v) { return std::isfinite(v) || is_forbidden(v); };
    for (double v : log_transition_.data())
      if (!ok(v)) throw InvalidArgument("transition matrix entry is NaN or +inf");
    for (double v : log_prior_)
      if (!ok(v)) throw InvalidArgument("log prior entry is NaN or +inf");
  }

  /// Zero log-scores everywhere (no preference between transitions or classes).
  static TransitionModel uniform(int num_classes) {
    return TransitionModel(Matrix(num_classes, num_classes, 0.0),
                           std::vector<double>(num_classes, 0.0));
  }

  int num_classes() const { return static_cast<int>(log_prior_.size()); }
  double transition(int from, int to) const { return log_transition_(from, to); }
  double prior(int c) const { return log_prior_[c]; }
  const Matrix& log_transition() const { return log_transition_; }
  const std::vector<double>& log_prior() const { return log_prior_; }

 private:
  Matrix log_transition_;
  std::vector<double> log_prior_;
};

// ---------------------------------------------------------------------------
// ScoreTable
// ---------------------------------------------------------------------------

/// How a DP cell was reached.
struct Backpointer {
  static constexpr int kStay = -1;
  static constexpr int kNone = -2;

  /// Class of the previous segment, kStay when the cell extends the current
  /// segment, kNone for the first segment or unreachable cells.
  int prev_class = kNone;
  /// True when a segment starts at this cell's frame.
  bool boundary = false;
  /// Start frame of the segment ending at this cell, when tracked (-1 otherwise).
  int segment_start = -1;
};

/// K x T x C table of DP values indexed by segment count k in [1, K].
class ScoreTable {
 public:
  ScoreTable() = default;
  ScoreTable(int max_segments, int num_frames, int num_classes)
      : k_(max_segments),
        t_(num_frames),
        c_(num_classes),
        values_(static_cast<std::size_t>(k_) * t_ * c_, kUnreachable),
        back_(values_.size()) {}

  int max_segments() const { return k_; }
  int num_frames() const { return t_; }
  int num_classes() const { return c_; }

  double value(int k, int t, int c) const { return values_[index(k, t, c)]; }
  double& value(int k, int t, int c) { return values_[index(k, t, c)]; }
  const Backpointer& back(int k, int t, int c) const { return back_[index(k, t, c)]; }
  Backpointer& back(int k, int t, int c) { return back_[index(k, t, c)]; }

 private:
  std::size_t index(int k, int t, int c) const {
    return (static_cast<std::size_t>(k - 1) * t_ + t) * c_ + c;
  }

  int k_ = 0;
  int t_ = 0;
  int c_ = 0;
  std::vector<double> values_;
  std::vector<Backpointer> back_;
};

}  // namespace semiseg
