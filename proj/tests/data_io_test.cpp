#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "semiseg/data_io.hpp"
#include "semiseg/metrics.hpp"
#include "test_util.hpp"

using namespace semiseg;

namespace {

int parse_error_line(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ParseError& e) {
    return e.line();
  }
  return -1;
}

}  // namespace

TEST(Scores, HeaderAndData) {
  std::istringstream in("c0,c1\n0.5,0.5\n");
  const auto f = parse_scores(in);
  EXPECT_EQ(f.scores.num_frames(), 1);
  EXPECT_EQ(f.classes.names(), (std::vector<std::string>{"c0", "c1"}));
}

TEST(Scores, HeaderlessGetsNumberedClasses) {
  std::istringstream in("1,2\n3,4\n-5.5,6e-3\n");
  const auto f = parse_scores(in);
  EXPECT_EQ(f.scores.num_frames(), 3);
  EXPECT_EQ(f.scores(2, 1), 6e-3);
  EXPECT_EQ(f.classes.names(), (std::vector<std::string>{"c0", "c1"}));
}

TEST(Scores, ErrorsNameTheLine) {
  EXPECT_EQ(parse_error_line([] {
              std::istringstream in("a,b\n1,2\n3,NaN\n");
              parse_scores(in);
            }),
            3);
  EXPECT_EQ(parse_error_line([] {
              std::istringstream in("1,2\n3\n");
              parse_scores(in);
            }),
            2);
  EXPECT_EQ(parse_error_line([] {
              std::istringstream in("1,2\n3,x\n");
              parse_scores(in);
            }),
            2);
  EXPECT_EQ(parse_error_line([] {
              std::istringstream in("1\n2\n");
              parse_scores(in);
            }),
            1);
  EXPECT_EQ(parse_error_line([] {
              std::istringstream in("NaN,1\n");
              parse_scores(in);
            }),
            1);
  std::istringstream empty("");
  EXPECT_THROW(parse_scores(empty), ParseError);
}

TEST(Scores, RoundTripIsExact) {
  std::mt19937_64 rng(1);
  const auto s = semiseg::testing::random_scores(rng, 20, 3, 1e3);
  const auto names = ClassDictionary({"walk", "cut", "place"});
  std::stringstream buf;
  write_scores(buf, s, names);
  const auto back = parse_scores(buf);
  EXPECT_EQ(back.scores.matrix(), s.matrix());
  EXPECT_EQ(back.classes.names(), names.names());
}

TEST(Features, RoundTripIsExact) {
  std::mt19937_64 rng(2);
  Matrix m(7, 3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (double& v : m.data()) v = n(rng) * 1e-7;
  std::stringstream buf;
  write_features(buf, FeatureSequence(m));
  EXPECT_EQ(parse_features(buf).matrix(), m);
}

TEST(Labels, ParseAndWrite) {
  ClassDictionary classes;
  std::istringstream in("cut\ncut\nplace\n\ncut\n");
  const auto y = parse_labels(in, classes);
  EXPECT_EQ(y, (LabelSequence{0, 0, 1, 0}));
  std::ostringstream out;
  write_labels(out, y, classes);
  EXPECT_EQ(out.str(), "cut\ncut\nplace\ncut\n");
  std::istringstream empty("\n");
  EXPECT_THROW(parse_labels(empty, classes), ParseError);
}

TEST(Segments, ParseAndRoundTrip) {
  ClassDictionary classes;
  std::istringstream in("cut,0,10\nplace,10,5\n");
  const auto seg = parse_segments(in, classes);
  EXPECT_EQ(seg, Segmentation({{0, 0, 10}, {1, 10, 5}}, 15));
  EXPECT_EQ(classes.names(), (std::vector<std::string>{"cut", "place"}));
  std::stringstream buf;
  write_segments(buf, seg, classes);
  EXPECT_EQ(buf.str(), "cut,0,10\nplace,10,5\n");
  ClassDictionary again;
  EXPECT_EQ(parse_segments(buf, again), seg);
}

TEST(Segments, Errors) {
  ClassDictionary classes;
  EXPECT_EQ(parse_error_line([&] {
              std::istringstream in("cut,0,10\nplace,12,5\n");
              parse_segments(in, classes);
            }),
            2);
  EXPECT_EQ(parse_error_line([&] {
              std::istringstream in("cut,0,10\nplace,8,5\n");
              parse_segments(in, classes);
            }),
            2);
  EXPECT_EQ(parse_error_line([&] {
              std::istringstream in("cut,0,0\n");
              parse_segments(in, classes);
            }),
            1);
  EXPECT_EQ(parse_error_line([&] {
              std::istringstream in("cut,0,2,4\n");
              parse_segments(in, classes);
            }),
            1);
  std::istringstream empty("");
  EXPECT_THROW(parse_segments(empty, classes), ParseError);
}

TEST(Transitions, RoundTripWithForbidden) {
  std::mt19937_64 rng(3);
  const auto m = semiseg::testing::random_transitions(rng, 4, 0.3);
  std::stringstream buf;
  write_transitions(buf, m);
  const auto back = parse_transitions(buf);
  EXPECT_EQ(back.log_transition(), m.log_transition());
  EXPECT_EQ(back.log_prior(), m.log_prior());
}

TEST(Transitions, Errors) {
  std::istringstream missing("[LOG_TRANSITION]\n-inf,0\n0,-inf\n");
  EXPECT_THROW(parse_transitions(missing), ParseError);
  EXPECT_EQ(parse_error_line([] {
              std::istringstream in("[LOG_TRANSITION]\n-inf,0\n0,nan\n[LOG_PRIOR]\n0,0\n");
              parse_transitions(in);
            }),
            3);
}

TEST(Weights, RoundTrip) {
  PotentialConfig cfg;
  for (Potential p : kAllPotentials) cfg.enabled.insert(p);
  cfg.num_classes = 3;
  cfg.feature_dim = 2;
  cfg.skip = 4;
  cfg.canonical_length = 7;
  cfg.boundary_window = 3;
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  WeightSet w = WeightSet::zeros(cfg);
  w.for_each([&](double& v) { v = n(rng); });
  std::stringstream buf;
  write_weights(buf, cfg, w);
  const auto back = parse_weights(buf);
  EXPECT_EQ(back.weights, w);
  EXPECT_EQ(back.config.enabled, cfg.enabled);
  EXPECT_EQ(back.config.skip, 4);
  EXPECT_EQ(back.config.canonical_length, 7);
  EXPECT_EQ(back.config.boundary_window, 3);
  EXPECT_FALSE(back.config.pair_data_skip);
}

TEST(Weights, Errors) {
  EXPECT_EQ(parse_error_line([] {
              std::istringstream in("[CONFIG]\nclasses 2\nfeatures 1\n[DATA]\n1\n2\n[DEEP]\n1\n");
              parse_weights(in);
            }),
            7);
  EXPECT_EQ(parse_error_line([] {
              std::istringstream in("[CONFIG]\nclasses 2\nfeatures 1\n[DATA]\n1\n");
              parse_weights(in);
            }),
            4);
  EXPECT_EQ(parse_error_line([] {
              std::istringstream in("[CONFIG]\nclasses two\n");
              parse_weights(in);
            }),
            2);
}

TEST(Files, ReadWriteAndMissingPath) {
  const auto dir = std::filesystem::temp_directory_path() / "semiseg_data_io_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "scores.csv").string();
  const auto s = ScoreMatrix::from_rows({{0.1, 0.2}, {0.3, 0.4}});
  write_scores(path, s, ClassDictionary::numbered(2));
  EXPECT_EQ(read_scores(path).scores.matrix(), s.matrix());
  EXPECT_THROW(read_scores((dir / "missing.csv").string()), IoError);
  std::filesystem::remove_all(dir);
}

TEST(Benchmark, SatisfiesInvariantsAndIsDeterministic) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto b = generate_benchmark(200, 4, 15, 2.0, seed);
    EXPECT_EQ(b.truth.size(), 15u);
    EXPECT_EQ(b.truth.total_frames(), 200);
    EXPECT_TRUE(b.truth.is_strict());
    EXPECT_EQ(b.scores.num_frames(), 200);
    const auto again = generate_benchmark(200, 4, 15, 2.0, seed);
    EXPECT_EQ(again.scores.matrix(), b.scores.matrix());
    EXPECT_EQ(again.truth, b.truth);
  }
  EXPECT_THROW(generate_benchmark(5, 2, 6, 1.0, 0), InvalidArgument);
  EXPECT_THROW(generate_benchmark(5, 1, 2, 1.0, 0), InvalidArgument);
}

TEST(Benchmark, HighSnrIsRecovered) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto b = generate_benchmark(300, 5, 12, 1e3, seed);
    const auto r = constrained_decode(b.scores, b.transitions, 12);
    EXPECT_EQ(r.segmentation, b.truth);
  }
}

TEST(Benchmark, ZeroSnrIsChanceLevel) {
  const int C = 4;
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto b = generate_benchmark(200, C, 10, 0.0, seed);
    const auto r = constrained_decode(b.scores, b.transitions, 10);
    total += frame_accuracy(segments_to_labels(b.truth), segments_to_labels(r.segmentation));
  }
  EXPECT_NEAR(total / 50.0, 1.0 / C, 0.1);
}

TEST(Toy, GeneratorShape) {
  ToyConfig cfg;
  cfg.noise_sd = 0.0;
  const auto d = generate_toy(cfg);
  ASSERT_EQ(d.train.size(), 2u * cfg.num_train_instances);
  EXPECT_EQ(d.test.features.num_frames(), 2 * cfg.segment_length);
  EXPECT_EQ(d.test.labels, LabelSequence(2 * cfg.segment_length, 1));
  for (const auto& s : d.train) {
    double mean = 0.0;
    for (int t = 0; t < s.features.num_frames(); ++t) mean += s.features(t, 0);
    mean /= s.features.num_frames();
    EXPECT_NEAR(mean, s.labels[0] == 1 ? 1.0 : 0.0, 1e-12);
  }
}

TEST(Toy, Deterministic) {
  ToyConfig cfg;
  cfg.seed = 123;
  const auto a = generate_toy(cfg);
  const auto b = generate_toy(cfg);
  EXPECT_EQ(a.test.features.matrix(), b.test.features.matrix());
  for (std::size_t i = 0; i < a.train.size(); ++i)
    EXPECT_EQ(a.train[i].features.matrix(), b.train[i].features.matrix());
  cfg.segment_length = 1;
  EXPECT_THROW(generate_toy(cfg), InvalidArgument);
}

TEST(Toy, DurationTermRemovesFragmentation) {
  const auto r = run_toy_experiment(ToyConfig{});
  EXPECT_EQ(r.acc_with_duration, 1.0);
  EXPECT_LT(r.acc_without_duration, r.acc_with_duration);
  EXPECT_GE(r.acc_without_duration, 0.5);
  EXPECT_LE(r.acc_without_duration, 0.85);
  EXPECT_GT(r.without_duration.size(), r.with_duration.size());
}
