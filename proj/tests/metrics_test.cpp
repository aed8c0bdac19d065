#include <gtest/gtest.h>

#include <functional>
#include <map>
#include <random>

#include "semiseg/metrics.hpp"
#include "test_util.hpp"

using namespace semiseg;

namespace {

/// Recursive Levenshtein with memoization, independent of the two-row DP.
int levenshtein_memo(const std::vector<int>& a, const std::vector<int>& b) {
  std::map<std::pair<std::size_t, std::size_t>, int> memo;
  std::function<int(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> int {
    if (i == a.size()) return static_cast<int>(b.size() - j);
    if (j == b.size()) return static_cast<int>(a.size() - i);
    const auto key = std::make_pair(i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    int best = go(i + 1, j + 1) + (a[i] != b[j]);
    best = std::min(best, go(i + 1, j) + 1);
    best = std::min(best, go(i, j + 1) + 1);
    memo[key] = best;
    return best;
  };
  return go(0, 0);
}

Segmentation strict_from_labels(const std::vector<int>& order, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dur(1, 6);
  std::vector<std::pair<int, int>> parts;
  for (int l : order) parts.emplace_back(l, dur(rng));
  return Segmentation::from_durations(parts);
}

}  // namespace

TEST(EditScore, Examples) {
  const Segmentation abc = Segmentation::from_durations({{0, 3}, {1, 2}, {2, 4}});
  const Segmentation ac = Segmentation::from_durations({{0, 5}, {2, 4}});
  EXPECT_DOUBLE_EQ(edit_score(abc, abc), 100.0);
  EXPECT_NEAR(edit_score(abc, ac), 66.67, 0.005);
  EXPECT_DOUBLE_EQ(edit_score(Segmentation({{0, 0, 3}}, 3), Segmentation({{1, 0, 3}}, 3)), 0.0);
}

TEST(EditScore, CollapsesRepeatedLabels) {
  const Segmentation a = Segmentation::from_durations({{0, 2}, {1, 2}});
  const Segmentation fragmented = Segmentation::from_durations({{0, 1}, {0, 1}, {1, 2}});
  EXPECT_DOUBLE_EQ(edit_score(a, fragmented), 100.0);
}

TEST(EditScore, OverSegmentationIsPenalized) {
  const Segmentation truth = Segmentation::from_durations({{0, 4}, {1, 4}});
  const Segmentation over = Segmentation::from_durations({{0, 2}, {2, 1}, {0, 1}, {1, 4}});
  EXPECT_DOUBLE_EQ(edit_score(truth, over), 50.0);
}

TEST(EditScore, SymmetricAndDurationInvariant) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> len(1, 8);
  for (int trial = 0; trial < 300; ++trial) {
    const auto order_a = labels_to_segments(semiseg::testing::random_labels(rng, len(rng), 4));
    const auto order_b = labels_to_segments(semiseg::testing::random_labels(rng, len(rng), 4));
    const auto la = order_a.labels();
    const auto lb = order_b.labels();
    const auto a1 = strict_from_labels(la, rng);
    const auto a2 = strict_from_labels(la, rng);
    const auto b1 = strict_from_labels(lb, rng);
    ASSERT_DOUBLE_EQ(edit_score(a1, b1), edit_score(b1, a1));
    ASSERT_DOUBLE_EQ(edit_score(a1, b1), edit_score(a2, b1));
    const double s = edit_score(a1, b1);
    ASSERT_GE(s, 0.0);
    ASSERT_LE(s, 100.0);
  }
}

TEST(Levenshtein, MatchesMemoizedRecursion) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> len(0, 12);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto a = semiseg::testing::random_labels(rng, len(rng), 4);
    const auto b = semiseg::testing::random_labels(rng, len(rng), 4);
    ASSERT_EQ(levenshtein(a, b), levenshtein_memo(a, b));
  }
}

TEST(Levenshtein, Textbook) {
  // kitten -> sitting
  const std::vector<int> kitten{10, 8, 19, 19, 4, 13};
  const std::vector<int> sitting{18, 8, 19, 19, 8, 13, 6};
  EXPECT_EQ(levenshtein(kitten, sitting), 3);
}

TEST(FrameAccuracy, Examples) {
  EXPECT_EQ(frame_accuracy(LabelSequence{0, 1, 2}, LabelSequence{0, 1, 2}), 1.0);
  EXPECT_EQ(frame_accuracy(LabelSequence{0, 0, 1, 1}, LabelSequence{0, 1, 1, 1}), 0.75);
  EXPECT_EQ(frame_accuracy(LabelSequence{0, 0}, LabelSequence{1, 1}), 0.0);
  EXPECT_THROW(frame_accuracy(LabelSequence{0}, LabelSequence{0, 0}), DimensionError);
}

TEST(FrameAccuracy, InvariantUnderRelabeling) {
  std::mt19937_64 rng(3);
  const std::vector<int> perm{2, 0, 3, 1};
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = semiseg::testing::random_labels(rng, 20, 4);
    const auto b = semiseg::testing::random_labels(rng, 20, 4);
    LabelSequence pa(a), pb(b);
    for (int& v : pa) v = perm[v];
    for (int& v : pb) v = perm[v];
    ASSERT_EQ(frame_accuracy(a, a), 1.0);
    ASSERT_EQ(frame_accuracy(a, b), frame_accuracy(pa, pb));
  }
}

TEST(ClassificationAccuracy, Examples) {
  const Segmentation gt({{0, 0, 2}, {1, 2, 2}}, 4);
  EXPECT_EQ(classification_accuracy(ScoreMatrix::from_rows({{1, 0}, {1, 0}, {0, 1}, {0, 1}}), gt),
            1.0);
  EXPECT_EQ(classification_accuracy(ScoreMatrix::from_rows({{1, 0}, {1, 0}, {1, 0}, {0, 3}}), gt),
            1.0);
  const Segmentation three = Segmentation::from_durations({{0, 1}, {1, 2}, {0, 1}});
  EXPECT_DOUBLE_EQ(classification_accuracy(ScoreMatrix(Matrix(4, 2, 0.5)), three), 2.0 / 3.0);
  EXPECT_THROW(classification_accuracy(ScoreMatrix(Matrix(3, 2, 0.0)), gt), DimensionError);
}

TEST(Evaluate, ReportsAllMetrics) {
  const Segmentation gt = Segmentation::from_durations({{0, 2}, {1, 2}});
  const Segmentation pred = Segmentation::from_durations({{0, 3}, {1, 1}});
  const auto s = ScoreMatrix::from_rows({{1, 0}, {1, 0}, {0, 1}, {0, 1}});
  const auto r = evaluate(gt, pred, &s);
  EXPECT_DOUBLE_EQ(r.edit_score, 100.0);
  EXPECT_DOUBLE_EQ(r.frame_accuracy, 0.75);
  ASSERT_TRUE(r.classification_accuracy);
  EXPECT_DOUBLE_EQ(*r.classification_accuracy, 1.0);
  EXPECT_FALSE(evaluate(gt, pred).classification_accuracy);
}

TEST(Evaluate, IgnoredLabelIsDropped) {
  const Segmentation gt = Segmentation::from_durations({{2, 2}, {0, 2}, {2, 1}, {1, 3}});
  const Segmentation pred = Segmentation::from_durations({{0, 4}, {1, 4}});
  const auto r = evaluate(gt, pred, nullptr, 2);
  EXPECT_DOUBLE_EQ(r.edit_score, 100.0);
  EXPECT_DOUBLE_EQ(r.frame_accuracy, 1.0);
  EXPECT_THROW(evaluate(gt, Segmentation::from_durations({{0, 3}}), nullptr), DimensionError);
}
