#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "semiseg/core.hpp"
#include "semiseg/framewise.hpp"
#include "semiseg/learning.hpp"
#include "semiseg/segmental.hpp"

namespace semiseg {

/// Malformed input; `line()` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, int line, const std::string& what)
      : Error(source + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// The file could not be opened or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// ClassDictionary
// ---------------------------------------------------------------------------

class ClassDictionary {
 public:
  ClassDictionary() = default;
  explicit ClassDictionary(std::vector<std::string> names) {
    for (auto& n : names) {
      if (n.empty()) throw InvalidArgument("class names must be non-empty");
      if (index_.contains(n)) throw InvalidArgument("duplicate class name '" + n + "'");
      index_.emplace(n, static_cast<int>(names_.size()));
      names_.push_back(std::move(n));
    }
  }
  /// "c0", "c1", ...
  static ClassDictionary numbered(int num_classes) {
    std::vector<std::string> names;
    for (int c = 0; c < num_classes; ++c) names.push_back("c" + std::to_string(c));
    return ClassDictionary(std::move(names));
  }

  int size() const { return static_cast<int>(names_.size()); }
  const std::string& name(int id) const { return names_.at(id); }
  const std::vector<std::string>& names() const { return names_; }
  std::optional<int> find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  /// Returns the id of `name`, appending it if unknown.
  int intern(std::string_view name) {
    if (auto id = find(name)) return *id;
    if (name.empty()) throw InvalidArgument("class names must be non-empty");
    index_.emplace(std::string(name), size());
    names_.emplace_back(name);
    return size() - 1;
  }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
};

// ---------------------------------------------------------------------------
// Text helpers
// ---------------------------------------------------------------------------

/// Round-trip formatting (17 significant digits).
inline std::string format_double(double v) {
  if (is_forbidden(v)) return "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t begin = 0;
  while (true) {
    const auto pos = line.find(sep, begin);
    out.push_back(trim(line.substr(begin, pos == std::string_view::npos ? pos : pos - begin)));
    if (pos == std::string_view::npos) break;
    begin = pos + 1;
  }
  return out;
}

/// Finite decimal, or nullopt.
inline std::optional<double> parse_finite(std::string_view cell) {
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

inline std::optional<int> parse_int(std::string_view cell) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) return std::nullopt;
  return v;
}

/// Non-blank lines with their 1-based line numbers.
inline std::vector<std::pair<int, std::string>> read_lines(std::istream& in) {
  std::vector<std::pair<int, std::string>> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    out.emplace_back(number, std::string(trim(line)));
  }
  return out;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

inline std::vector<double> parse_row(std::string_view line, int number, const std::string& source,
                                     bool allow_forbidden = false) {
  std::vector<double> row;
  for (auto cell : split(line)) {
    if (allow_forbidden && cell == "-inf") {
      row.push_back(kForbidden);
      continue;
    }
    auto v = parse_finite(cell);
    if (!v) throw ParseError(source, number, "not a finite number: '" + std::string(cell) + "'");
    row.push_back(*v);
  }
  return row;
}

/// Numeric table; every row must have the same width.
inline Matrix parse_table(const std::vector<std::pair<int, std::string>>& lines,
                          std::size_t first, std::size_t last, const std::string& source,
                          bool allow_forbidden = false) {
  std::vector<double> data;
  std::size_t width = 0;
  for (std::size_t i = first; i < last; ++i) {
    const auto row = parse_row(lines[i].second, lines[i].first, source, allow_forbidden);
    if (i == first) width = row.size();
    if (row.size() != width) {
      throw ParseError(source, lines[i].first,
                       "expected " + std::to_string(width) + " columns, got " +
                           std::to_string(row.size()));
    }
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(last - first, width, std::move(data));
}

inline void write_row(std::ostream& out, std::span<const double> row) {
  for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
  out << '\n';
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Scores and features
// ---------------------------------------------------------------------------

struct ScoreFile {
  ScoreMatrix scores;
  ClassDictionary classes;
};

/// Comma-separated rows of C scores with an optional header of class names.
inline ScoreFile parse_scores(std::istream& in, const std::string& source = "<scores>") {
  const auto lines = detail::read_lines(in);
  if (lines.empty()) throw ParseError(source, 0, "no data");
  std::optional<ClassDictionary> names;
  std::size_t first = 0;
  const auto header = detail::split(lines[0].second);
  if (!detail::parse_finite(header[0]) && header[0] != "NaN" && header[0] != "nan") {
    std::vector<std::string> cols(header.begin(), header.end());
    try {
      names = ClassDictionary(cols);
    } catch (const InvalidArgument& e) {
      throw ParseError(source, lines[0].first, e.what());
    }
    first = 1;
  }
  if (first == lines.size()) throw ParseError(source, lines[0].first, "header without data rows");
  Matrix m = detail::parse_table(lines, first, lines.size(), source);
  if (names && static_cast<std::size_t>(names->size()) != m.cols()) {
    throw ParseError(source, lines[first].first, "row width does not match header");
  }
  if (m.cols() < 2) throw ParseError(source, lines[first].first, "need at least two classes");
  const int C = static_cast<int>(m.cols());
  return {ScoreMatrix(std::move(m)), names ? *names : ClassDictionary::numbered(C)};
}

inline ScoreFile read_scores(const std::string& path) {
  auto in = detail::open_input(path);
  return parse_scores(in, path);
}

inline void write_scores(std::ostream& out, const ScoreMatrix& scores,
                         const ClassDictionary& classes) {
  for (int c = 0; c < classes.size(); ++c) out << (c ? "," : "") << classes.name(c);
  out << '\n';
  for (int t = 0; t < scores.num_frames(); ++t) detail::write_row(out, scores.frame(t));
}

inline void write_scores(const std::string& path, const ScoreMatrix& scores,
                         const ClassDictionary& classes) {
  auto out = detail::open_output(path);
  write_scores(out, scores, classes);
}

/// Headerless T x F numeric table.
inline FeatureSequence parse_features(std::istream& in, const std::string& source = "<features>") {
  const auto lines = detail::read_lines(in);
  if (lines.empty()) throw ParseError(source, 0, "no data");
  return FeatureSequence(detail::parse_table(lines, 0, lines.size(), source));
}

inline FeatureSequence read_features(const std::string& path) {
  auto in = detail::open_input(path);
  return parse_features(in, path);
}

inline void write_features(std::ostream& out, const FeatureSequence& x) {
  for (int t = 0; t < x.num_frames(); ++t) detail::write_row(out, x.frame(t));
}

// ---------------------------------------------------------------------------
// Labels and segments
// ---------------------------------------------------------------------------

/// One class name per line. Unknown names are added to `classes`.
inline LabelSequence parse_labels(std::istream& in, ClassDictionary& classes,
                                  const std::string& source = "<labels>") {
  const auto lines = detail::read_lines(in);
  if (lines.empty()) throw ParseError(source, 0, "no labels");
  LabelSequence y;
  for (const auto& [number, text] : lines) {
    if (text.find(',') != std::string::npos) {
      throw ParseError(source, number, "label names may not contain ','");
    }
    y.push_back(classes.intern(text));
  }
  return y;
}

inline LabelSequence read_labels(const std::string& path, ClassDictionary& classes) {
  auto in = detail::open_input(path);
  return parse_labels(in, classes, path);
}

inline void write_labels(std::ostream& out, std::span<const int> y,
                         const ClassDictionary& classes) {
  for (int label : y) out << classes.name(label) << '\n';
}

inline void write_labels(const std::string& path, std::span<const int> y,
                         const ClassDictionary& classes) {
  auto out = detail::open_output(path);
  write_labels(out, y, classes);
}

/// `label,start,duration` per line; segments must tile [0, T) in order.
inline Segmentation parse_segments(std::istream& in, ClassDictionary& classes,
                                   const std::string& source = "<segments>") {
  const auto lines = detail::read_lines(in);
  if (lines.empty()) throw ParseError(source, 0, "no segments");
  std::vector<Segment> segs;
  int expected = 0;
  for (const auto& [number, text] : lines) {
    const auto cells = detail::split(text);
    if (cells.size() != 3) throw ParseError(source, number, "expected label,start,duration");
    const auto start = detail::parse_int(cells[1]);
    const auto duration = detail::parse_int(cells[2]);
    if (!start || !duration) throw ParseError(source, number, "start and duration must be integers");
    if (*duration < 1) throw ParseError(source, number, "duration must be positive");
    if (*start != expected) {
      throw ParseError(source, number,
                       (*start < expected ? "overlaps previous segment" : "gap before segment") +
                           std::string(" (start ") + std::to_string(*start) + ", expected " +
                           std::to_string(expected) + ")");
    }
    if (cells[0].empty()) throw ParseError(source, number, "empty label");
    segs.push_back({classes.intern(cells[0]), *start, *duration});
    expected = *start + *duration;
  }
  return Segmentation(std::move(segs), expected);
}

inline Segmentation read_segments(const std::string& path, ClassDictionary& classes) {
  auto in = detail::open_input(path);
  return parse_segments(in, classes, path);
}

inline void write_segments(std::ostream& out, const Segmentation& seg,
                           const ClassDictionary& classes) {
  for (const Segment& s : seg.segments())
    out << classes.name(s.label) << ',' << s.start << ',' << s.duration << '\n';
}

inline void write_segments(const std::string& path, const Segmentation& seg,
                           const ClassDictionary& classes) {
  auto out = detail::open_output(path);
  write_segments(out, seg, classes);
}

// ---------------------------------------------------------------------------
// Sectioned files: transitions and weights
// ---------------------------------------------------------------------------

namespace detail {

struct Section {
  std::string name;
  int line = 0;
  std::size_t first = 0;  // index into lines
  std::size_t last = 0;
};

inline std::vector<Section> split_sections(const std::vector<std::pair<int, std::string>>& lines,
                                           const std::string& source) {
  std::vector<Section> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& text = lines[i].second;
    if (text.front() == '[') {
      if (text.back() != ']') throw ParseError(source, lines[i].first, "unterminated section");
      if (!out.empty()) out.back().last = i;
      out.push_back({text.substr(1, text.size() - 2), lines[i].first, i + 1, lines.size()});
    } else if (out.empty()) {
      throw ParseError(source, lines[i].first, "data before first section header");
    }
  }
  return out;
}

}  // namespace detail

/// [LOG_TRANSITION] C rows, then [LOG_PRIOR] one row; "-inf" marks forbidden.
inline TransitionModel parse_transitions(std::istream& in,
                                         const std::string& source = "<transitions>") {
  const auto lines = detail::read_lines(in);
  std::optional<Matrix> a, prior;
  for (const auto& sec : detail::split_sections(lines, source)) {
    if (sec.first == sec.last) throw ParseError(source, sec.line, "empty section");
    Matrix m = detail::parse_table(lines, sec.first, sec.last, source, true);
    if (sec.name == "LOG_TRANSITION") {
      a = std::move(m);
    } else if (sec.name == "LOG_PRIOR") {
      prior = std::move(m);
    } else {
      throw ParseError(source, sec.line, "unknown section '" + sec.name + "'");
    }
  }
  if (!a || !prior) throw ParseError(source, 0, "need LOG_TRANSITION and LOG_PRIOR sections");
  if (prior->rows() != 1) throw ParseError(source, 0, "LOG_PRIOR must be a single row");
  auto p = prior->data();
  try {
    return TransitionModel(std::move(*a), std::vector<double>(p.begin(), p.end()));
  } catch (const Error& e) {
    throw ParseError(source, 0, e.what());
  }
}

inline TransitionModel read_transitions(const std::string& path) {
  auto in = detail::open_input(path);
  return parse_transitions(in, path);
}

inline void write_transitions(std::ostream& out, const TransitionModel& m) {
  out << "[LOG_TRANSITION]\n";
  for (int r = 0; r < m.num_classes(); ++r) detail::write_row(out, m.log_transition().row(r));
  out << "[LOG_PRIOR]\n";
  detail::write_row(out, m.log_prior());
}

inline void write_transitions(const std::string& path, const TransitionModel& m) {
  auto out = detail::open_output(path);
  write_transitions(out, m);
}

struct WeightFile {
  PotentialConfig config;
  WeightSet weights;
};

/// [CONFIG] `key value` lines, then one [POTENTIAL_NAME] section per enabled
/// potential holding that block's rows.
inline void write_weights(std::ostream& out, const PotentialConfig& cfg, const WeightSet& w) {
  out << "[CONFIG]\n"
      << "classes " << cfg.num_classes << '\n'
      << "features " << cfg.feature_dim << '\n'
      << "skip " << cfg.skip << '\n';
  if (cfg.pair_data_skip) out << "pair_data_skip " << *cfg.pair_data_skip << '\n';
  out << "canonical_length " << cfg.canonical_length << '\n'
      << "boundary_window " << cfg.boundary_window << '\n';
  for (Potential p : kAllPotentials) {
    if (!cfg.has(p)) continue;
    out << '[' << potential_name(p) << "]\n";
    const Matrix& m = w.block(p);
    for (std::size_t r = 0; r < m.rows(); ++r) detail::write_row(out, m.row(r));
  }
}

inline void write_weights(const std::string& path, const PotentialConfig& cfg,
                          const WeightSet& w) {
  auto out = detail::open_output(path);
  write_weights(out, cfg, w);
}

inline WeightFile parse_weights(std::istream& in, const std::string& source = "<weights>") {
  const auto lines = detail::read_lines(in);
  const auto sections = detail::split_sections(lines, source);
  if (sections.empty() || sections.front().name != "CONFIG") {
    throw ParseError(source, 0, "weights file must start with [CONFIG]");
  }
  PotentialConfig cfg;
  const auto& conf = sections.front();
  for (std::size_t i = conf.first; i < conf.last; ++i) {
    std::istringstream kv(lines[i].second);
    std::string key;
    std::string value;
    kv >> key >> value;
    const auto v = detail::parse_int(value);
    if (!v) throw ParseError(source, lines[i].first, "expected 'key integer'");
    if (key == "classes") cfg.num_classes = *v;
    else if (key == "features") cfg.feature_dim = *v;
    else if (key == "skip") cfg.skip = *v;
    else if (key == "pair_data_skip") cfg.pair_data_skip = *v;
    else if (key == "canonical_length") cfg.canonical_length = *v;
    else if (key == "boundary_window") cfg.boundary_window = *v;
    else throw ParseError(source, lines[i].first, "unknown config key '" + key + "'");
  }
  for (std::size_t s = 1; s < sections.size(); ++s) {
    const auto p = parse_potential(sections[s].name);
    if (!p) throw ParseError(source, sections[s].line, "unknown potential '" + sections[s].name + "'");
    cfg.enabled.insert(*p);
  }
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw ParseError(source, conf.line, e.what());
  }
  WeightSet w = WeightSet::zeros(cfg);
  for (std::size_t s = 1; s < sections.size(); ++s) {
    const auto& sec = sections[s];
    Matrix& block = w.block(*parse_potential(sec.name));
    if (sec.last - sec.first != block.rows()) {
      throw ParseError(source, sec.line,
                       "expected " + std::to_string(block.rows()) + " rows for " + sec.name);
    }
    Matrix m = detail::parse_table(lines, sec.first, sec.last, source);
    if (m.cols() != block.cols()) {
      throw ParseError(source, sec.line,
                       "expected " + std::to_string(block.cols()) + " columns for " + sec.name);
    }
    block = std::move(m);
  }
  return {cfg, std::move(w)};
}

inline WeightFile read_weights(const std::string& path) {
  auto in = detail::open_input(path);
  return parse_weights(in, path);
}

// ---------------------------------------------------------------------------
// Synthetic benchmark instances
// ---------------------------------------------------------------------------

struct BenchmarkInstance {
  ScoreMatrix scores;
  Segmentation truth;
  TransitionModel transitions;
};

/// Random strict ground truth with `true_segments` segments; scores are
/// snr * one_hot(truth) plus unit Gaussian noise; transitions are estimated
/// from the ground truth.
inline BenchmarkInstance generate_benchmark(int num_frames, int num_classes, int true_segments,
                                            double snr, std::uint64_t seed) {
  if (num_classes < 2) throw InvalidArgument("need at least two classes");
  if (true_segments < 1 || true_segments > num_frames) {
    throw InvalidArgument("true segment count must lie in [1, T]");
  }
  std::mt19937_64 rng(seed);
  std::vector<int> cuts(num_frames - 1);
  std::iota(cuts.begin(), cuts.end(), 1);
  std::shuffle(cuts.begin(), cuts.end(), rng);
  cuts.resize(true_segments - 1);
  std::sort(cuts.begin(), cuts.end());
  cuts.push_back(num_frames);

  std::uniform_int_distribution<int> first_label(0, num_classes - 1);
  std::uniform_int_distribution<int> other_label(0, num_classes - 2);
  std::vector<Segment> segs;
  int start = 0;
  int prev = -1;
  for (int end : cuts) {
    int label = first_label(rng);
    if (prev >= 0) {
      label = other_label(rng);
      if (label >= prev) ++label;
    }
    segs.push_back({label, start, end - start});
    start = end;
    prev = label;
  }
  Segmentation truth(std::move(segs), num_frames);

  std::normal_distribution<double> noise(0.0, 1.0);
  Matrix s(num_frames, num_classes, 0.0);
  const LabelSequence y = segments_to_labels(truth);
  for (int t = 0; t < num_frames; ++t)
    for (int c = 0; c < num_classes; ++c) s(t, c) = (y[t] == c ? snr : 0.0) + noise(rng);

  TransitionModel transitions = estimate_transitions({truth}, num_classes);
  return {ScoreMatrix(std::move(s)), std::move(truth), std::move(transitions)};
}

// ---------------------------------------------------------------------------
// Sine-wave toy experiment
// ---------------------------------------------------------------------------

struct ToyConfig {
  int segment_length = 50;
  double phase_shift = std::numbers::pi / 2.0;
  double offset = 1.0;
  double cycles_per_segment = 1.0;
  double noise_sd = 0.05;
  int num_train_instances = 10;
  std::uint64_t seed = 0;

  void validate() const {
    if (segment_length < 2) throw InvalidArgument("segment length must be >= 2");
    if (!(noise_sd >= 0.0)) throw InvalidArgument("noise sd must be >= 0");
    if (num_train_instances < 1) throw InvalidArgument("need at least one training instance");
  }
};

struct ToyData {
  /// Single-instance sequences, alternating class 0 and class 1.
  std::vector<Sample> train;
  /// Two back-to-back class-1 instances.
  Sample test;
};

namespace detail {

inline std::vector<double> toy_instance(const ToyConfig& cfg, int label, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> x(cfg.segment_length);
  for (int t = 0; t < cfg.segment_length; ++t) {
    const double phase = 2.0 * std::numbers::pi * cfg.cycles_per_segment * t / cfg.segment_length;
    const double clean = label == 0 ? std::sin(phase) : std::sin(phase + cfg.phase_shift) + cfg.offset;
    x[t] = clean + cfg.noise_sd * noise(rng);
  }
  return x;
}

inline FeatureSequence column(const std::vector<double>& x) {
  return FeatureSequence(Matrix(x.size(), 1, x));
}

}  // namespace detail

/// Class 0: sin(2 pi k t / L) + noise. Class 1: the same wave shifted by
/// `phase_shift` and raised by `offset`. `num_train_instances` per class.
inline ToyData generate_toy(const ToyConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  ToyData data{{}, {detail::column({0.0}), {}}};
  for (int i = 0; i < cfg.num_train_instances; ++i) {
    for (int label = 0; label < 2; ++label) {
      data.train.push_back({detail::column(detail::toy_instance(cfg, label, rng)),
                            LabelSequence(cfg.segment_length, label)});
    }
  }
  std::vector<double> test = detail::toy_instance(cfg, 1, rng);
  const auto second = detail::toy_instance(cfg, 1, rng);
  test.insert(test.end(), second.begin(), second.end());
  data.test = {detail::column(test), LabelSequence(test.size(), 1)};
  return data;
}

struct ToyReport {
  double acc_framewise = 0.0;
  double acc_without_duration = 0.0;
  double acc_with_duration = 0.0;
  DurationFeature duration;
  Matrix frame_scores;  // T x 2: log-likelihood ratio of class 0 and its negation
  Segmentation without_duration;
  Segmentation with_duration;
};

/// Quadratic duration weights d^2 / L - 0.6 d: negative below 0.6 L and
/// superadditive, so splitting a segment costs more than it can gain.
inline DurationFeature toy_duration(double mean_duration) {
  return DurationFeature::quadratic(-0.6, 1.0 / mean_duration);
}

/// Fits a shared-variance Gaussian classifier to the training frames and
/// scores each test frame by the log-likelihood ratio (class 0) and its
/// negation (class 1). Then
/// decodes the test sequence by Segmental Viterbi with mean-plus-prior segment
/// scores, without and with a quadratic duration term. Adjacent segments may
/// share a label.
inline ToyReport run_toy_experiment(const ToyConfig& cfg) {
  const ToyData data = generate_toy(cfg);

  double sum[2] = {0, 0};
  double count[2] = {0, 0};
  for (const Sample& s : data.train)
    for (int t = 0; t < s.features.num_frames(); ++t) {
      sum[s.labels[t]] += s.features(t, 0);
      count[s.labels[t]] += 1;
    }
  const double mu[2] = {sum[0] / count[0], sum[1] / count[1]};
  double sq = 0.0;
  for (const Sample& s : data.train)
    for (int t = 0; t < s.features.num_frames(); ++t) {
      const double r = s.features(t, 0) - mu[s.labels[t]];
      sq += r * r;
    }
  const double var = sq / (count[0] + count[1]);

  const FeatureSequence& x = data.test.features;
  const int T = x.num_frames();
  Matrix scores(T, 2, 0.0);
  for (int t = 0; t < T; ++t) {
    double log_lik[2];
    for (int c = 0; c < 2; ++c) log_lik[c] = (mu[c] * x(t, 0) - 0.5 * mu[c] * mu[c]) / var;
    const double llr = log_lik[0] - log_lik[1];
    scores(t, 0) = llr;
    scores(t, 1) = -llr;
  }
  const ScoreMatrix score_matrix(scores);

  std::vector<Segmentation> train_segs;
  double total_duration = 0.0;
  for (const Sample& s : data.train) {
    train_segs.push_back(labels_to_segments(s.labels));
    for (const Segment& seg : train_segs.back().segments()) total_duration += seg.duration;
  }
  const double mean_duration = total_duration / static_cast<double>(train_segs.size());
  // The test sequence is two back-to-back instances of one class, so segments
  // may repeat a label; only the class prior is estimated.
  const TransitionModel model(Matrix(2, 2, 0.0),
                              estimate_transitions(train_segs, 2).log_prior());

  ToyReport r;
  r.frame_scores = scores;
  LabelSequence framewise(T);
  for (int t = 0; t < T; ++t) framewise[t] = scores(t, 1) > scores(t, 0) ? 1 : 0;
  r.acc_framewise = hamming_loss(framewise, data.test.labels);
  r.acc_framewise = 1.0 - r.acc_framewise / T;

  r.without_duration = segmental_viterbi(score_matrix, model, T, SegmentScoring::kMeanPlusPrior,
                                         DurationFeature::none(), Adjacency::kAllowRepeats)
                           .segmentation;
  r.duration = toy_duration(mean_duration);
  r.with_duration = segmental_viterbi(score_matrix, model, T, SegmentScoring::kMeanPlusPrior,
                                      r.duration, Adjacency::kAllowRepeats)
                        .segmentation;

  auto accuracy = [&](const Segmentation& seg) {
    const LabelSequence y = segments_to_labels(seg);
    return 1.0 - static_cast<double>(hamming_loss(y, data.test.labels)) / T;
  };
  r.acc_without_duration = accuracy(r.without_duration);
  r.acc_with_duration = accuracy(r.with_duration);
  return r;
}

}  // namespace semiseg
