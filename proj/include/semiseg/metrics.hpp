#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <vector>

#include "semiseg/core.hpp"

namespace semiseg {

/// Unit-cost insert/delete/substitute distance, two-row DP.
inline int levenshtein(std::span<const int> a, std::span<const int> b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const int sub = prev[j - 1] + (a[i - 1] != b[j - 1]);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

namespace detail {

inline std::vector<int> collapsed_labels(const Segmentation& seg) {
  std::vector<int> out;
  for (const Segment& s : seg.segments())
    if (out.empty() || out.back() != s.label) out.push_back(s.label);
  return out;
}

}  // namespace detail

/// (1 - Lev / max(M, N)) * 100 over run-length-collapsed segment labels.
inline double edit_score(const Segmentation& truth, const Segmentation& pred) {
  if (truth.size() == 0 || pred.size() == 0) throw InvalidArgument("empty segmentation");
  const auto a = detail::collapsed_labels(truth);
  const auto b = detail::collapsed_labels(pred);
  const double norm = static_cast<double>(std::max(a.size(), b.size()));
  return (1.0 - levenshtein(a, b) / norm) * 100.0;
}

inline double frame_accuracy(std::span<const int> truth, std::span<const int> pred) {
  if (truth.size() != pred.size()) throw DimensionError("label sequences differ in length");
  if (truth.empty()) throw InvalidArgument("empty label sequence");
  std::size_t hits = 0;
  for (std::size_t t = 0; t < truth.size(); ++t) hits += truth[t] == pred[t];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

/// Fraction of ground-truth segments whose mean score argmax (lowest index on
/// ties) matches the segment label.
inline double classification_accuracy(const ScoreMatrix& scores, const Segmentation& truth) {
  if (truth.total_frames() != scores.num_frames()) {
    throw DimensionError("segmentation and scores differ in length");
  }
  if (truth.max_label() >= scores.num_classes()) {
    throw DimensionError("segment label outside the score classes");
  }
  const int C = scores.num_classes();
  std::vector<double> mean(C);
  std::size_t hits = 0;
  for (const Segment& s : truth.segments()) {
    std::fill(mean.begin(), mean.end(), 0.0);
    for (int t = s.start; t < s.end(); ++t)
      for (int c = 0; c < C; ++c) mean[c] += scores(t, c);
    for (double& m : mean) m /= s.duration;
    const int best = static_cast<int>(std::max_element(mean.begin(), mean.end()) - mean.begin());
    hits += best == s.label;
  }
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

struct EvalReport {
  double edit_score = 0.0;      // [0, 100]
  double frame_accuracy = 0.0;  // [0, 1]
  std::optional<double> classification_accuracy;
};

/// Drops frames whose ground-truth label is `ignore` from both sequences.
inline std::pair<LabelSequence, LabelSequence> drop_label(std::span<const int> truth,
                                                          std::span<const int> pred,
                                                          int ignore) {
  if (truth.size() != pred.size()) throw DimensionError("label sequences differ in length");
  std::pair<LabelSequence, LabelSequence> out;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    if (truth[t] == ignore) continue;
    out.first.push_back(truth[t]);
    out.second.push_back(pred[t]);
  }
  return out;
}

/// Removes segments labeled `ignore`, keeping the remaining label order.
/// Returns nullopt when nothing is left.
inline std::optional<Segmentation> without_label(const Segmentation& seg, int ignore) {
  std::vector<std::pair<int, int>> kept;
  for (const Segment& s : seg.segments())
    if (s.label != ignore) kept.emplace_back(s.label, s.duration);
  if (kept.empty()) return std::nullopt;
  return Segmentation::from_durations(kept);
}

/// Edit score and frame accuracy, plus classification accuracy when scores are
/// given. With `ignore_label`, that class is removed before scoring.
inline EvalReport evaluate(const Segmentation& truth, const Segmentation& pred,
                           const ScoreMatrix* scores = nullptr,
                           std::optional<int> ignore_label = std::nullopt) {
  if (truth.total_frames() != pred.total_frames()) {
    throw DimensionError("ground truth and prediction cover different frame counts");
  }
  EvalReport r;
  const LabelSequence y_true = segments_to_labels(truth);
  const LabelSequence y_pred = segments_to_labels(pred);
  if (ignore_label) {
    const auto t = without_label(truth, *ignore_label);
    const auto p = without_label(pred, *ignore_label);
    if (!t || !p) {
      r.edit_score = (!t && !p) ? 100.0 : 0.0;
    } else {
      r.edit_score = edit_score(*t, *p);
    }
    const auto [a, b] = drop_label(y_true, y_pred, *ignore_label);
    r.frame_accuracy = a.empty() ? 1.0 : frame_accuracy(a, b);
  } else {
    r.edit_score = edit_score(truth, pred);
    r.frame_accuracy = frame_accuracy(y_true, y_pred);
  }
  if (scores) r.classification_accuracy = classification_accuracy(*scores, truth);
  return r;
}

}  // namespace semiseg
