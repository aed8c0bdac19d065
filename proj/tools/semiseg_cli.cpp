// semiseg: decode, evaluate, train, benchmark and run the sine-wave toy.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 infeasible decode.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "semiseg/semiseg.hpp"

namespace fs = std::filesystem;
using namespace semiseg;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kInfeasible = 3 };

struct UsageError : Error {
  using Error::Error;
};
struct DataError : Error {
  using Error::Error;
};

/// Runs a loader, reporting any library error as a data error.
template <typename Fn>
auto load(Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ParseError&) {
    throw;
  } catch (const IoError&) {
    throw;
  } catch (const Error& e) {
    throw DataError(e.what());
  }
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

enum class Format { kText, kCsv };

const std::map<std::string, Format> kFormats{{"text", Format::kText}, {"csv", Format::kCsv}};

/// Files in `dir` with extension `ext`, sorted by name.
std::vector<fs::path> files_with_extension(const std::string& dir, const std::string& ext) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ext) out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// decode
// ---------------------------------------------------------------------------

struct DecodeOptions {
  std::string scores;
  std::string transitions;
  std::string train_segments;
  std::string features;
  std::string weights;
  std::string algo = "constrained";
  std::optional<int> k;
  std::optional<int> d;
  std::string variant = "sum";
  std::string duration = "none";
  std::vector<double> duration_weights;
  std::string out;
  Format format = Format::kText;
};

DurationFeature parse_duration(const std::string& kind, const std::vector<double>& w) {
  if (kind == "none") {
    if (!w.empty()) throw UsageError("--duration-weights given without a duration model");
    return DurationFeature::none();
  }
  if (kind == "discrete") {
    if (w.size() != 1) throw UsageError("--duration discrete needs one --duration-weights value");
    return DurationFeature::discrete(w[0]);
  }
  if (w.size() != 2) throw UsageError("--duration quadratic needs two --duration-weights values");
  return DurationFeature::quadratic(w[0], w[1]);
}

int run_framewise_decode(const DecodeOptions& o) {
  if (o.features.empty() || o.weights.empty()) {
    throw UsageError("--algo framewise needs --features and --weights");
  }
  const auto wf = read_weights(o.weights);
  const auto x = read_features(o.features);
  if (x.feature_dim() != wf.config.feature_dim) {
    throw DataError("feature dimension does not match the weights file");
  }
  const LabelSequence y = load([&] { return framewise_decode(wf.weights, x, wf.config); });
  const Segmentation seg = labels_to_segments(y);
  const double energy = framewise_energy(wf.weights, x, y, wf.config);
  const auto classes = ClassDictionary::numbered(wf.config.num_classes);
  if (!o.out.empty()) write_segments(o.out, seg, classes);
  if (o.format == Format::kCsv) {
    std::cout << "algo,energy,segments\nframewise," << format_double(energy) << ','
              << seg.size() << '\n';
  } else {
    std::cout << "energy: " << format_double(energy) << "\nsegments: " << seg.size() << '\n';
  }
  return kOk;
}

int run_decode(const DecodeOptions& o) {
  if (o.algo == "framewise") return run_framewise_decode(o);
  if (o.scores.empty()) throw UsageError("--scores is required");
  if (o.transitions.empty() == o.train_segments.empty()) {
    throw UsageError("give exactly one of --transitions and --train-segments");
  }
  if (o.algo == "segviterbi" && !o.d) throw UsageError("--algo segviterbi needs --D");
  if (o.algo == "constrained" && !o.k && o.train_segments.empty()) {
    throw UsageError("--algo constrained needs --K (or --train-segments to derive it)");
  }
  const SegmentScoring scoring =
      o.variant == "sum" ? SegmentScoring::kSum : SegmentScoring::kMeanPlusPrior;
  const DurationFeature duration = parse_duration(o.duration, o.duration_weights);

  ScoreFile sf = read_scores(o.scores);
  ClassDictionary& classes = sf.classes;
  const int C = sf.scores.num_classes();
  const int T = sf.scores.num_frames();

  std::optional<TransitionModel> model;
  int k = o.k.value_or(0);
  if (!o.transitions.empty()) {
    model = read_transitions(o.transitions);
  } else {
    std::vector<Segmentation> train;
    for (const auto& p : files_with_extension(o.train_segments, ".segments")) {
      train.push_back(read_segments(p.string(), classes));
      if (!o.k) k = std::max(k, static_cast<int>(train.back().size()));
    }
    if (train.empty()) throw DataError("no .segments files in " + o.train_segments);
    if (classes.size() != C) throw DataError("training segments use classes absent from scores");
    model = load([&] { return estimate_transitions(train, C); });
  }
  if (model->num_classes() != C) throw DataError("transitions and scores disagree on classes");

  Segmentation seg({{0, 0, 1}}, 1);
  double energy = 0.0;
  if (o.algo == "segviterbi") {
    if (*o.d < 1 || *o.d > T) throw UsageError("--D must lie in [1, T]");
    auto r = segmental_viterbi(sf.scores, *model, *o.d, scoring, duration);
    seg = std::move(r.segmentation);
    energy = r.energy;
  } else {
    k = std::min(k, T);
    if (k < 1) throw UsageError("--K must be at least 1");
    auto r = constrained_decode(sf.scores, *model, k, scoring, duration);
    seg = std::move(r.segmentation);
    energy = r.energy;
  }
  if (!o.out.empty()) write_segments(o.out, seg, classes);
  if (o.format == Format::kCsv) {
    std::cout << "algo,energy,segments\n"
              << o.algo << ',' << format_double(energy) << ',' << seg.size() << '\n';
  } else {
    std::cout << "energy: " << format_double(energy) << "\nsegments: " << seg.size() << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalOptions {
  std::string gt;
  std::string pred;
  std::string scores;
  std::string ignore_label;
  Format format = Format::kText;
};

int run_eval(const EvalOptions& o) {
  ClassDictionary classes;
  std::optional<ScoreMatrix> scores;
  if (!o.scores.empty()) {
    auto sf = read_scores(o.scores);
    classes = sf.classes;
    scores.emplace(std::move(sf.scores));
  }
  const Segmentation gt = read_segments(o.gt, classes);
  const Segmentation pred = read_segments(o.pred, classes);
  std::optional<int> ignore;
  if (!o.ignore_label.empty()) {
    ignore = classes.find(o.ignore_label);
    if (!ignore) throw UsageError("unknown --ignore-label '" + o.ignore_label + "'");
  }
  if (scores && classes.size() > scores->num_classes()) {
    throw DataError("segment labels not present in the scores header");
  }
  const EvalReport r =
      load([&] { return evaluate(gt, pred, scores ? &*scores : nullptr, ignore); });
  if (o.format == Format::kCsv) {
    std::cout << "edit,accuracy" << (r.classification_accuracy ? ",classification" : "") << '\n'
              << fmt("%.2f", r.edit_score) << ',' << fmt("%.2f", 100.0 * r.frame_accuracy);
    if (r.classification_accuracy) std::cout << ',' << fmt("%.2f", 100.0 * *r.classification_accuracy);
    std::cout << '\n';
  } else {
    std::cout << "Edit: " << fmt("%.2f", r.edit_score)
              << " Acc: " << fmt("%.2f", 100.0 * r.frame_accuracy);
    if (r.classification_accuracy)
      std::cout << " Class: " << fmt("%.2f", 100.0 * *r.classification_accuracy);
    std::cout << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct BenchOptions {
  int t = 3000;
  int c = 10;
  int k = 20;
  std::optional<int> d;
  std::optional<int> k_true;
  int reps = 5;
  double snr = 3.0;
  std::uint64_t seed = 0;
  Format format = Format::kText;
};

template <typename Fn>
double median_ms(int reps, Fn&& fn) {
  fn();
  std::vector<double> ms;
  for (int i = 0; i < reps; ++i) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    ms.push_back(
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count());
  }
  std::sort(ms.begin(), ms.end());
  return ms[ms.size() / 2];
}

int run_bench(const BenchOptions& o) {
  if (o.reps < 1) throw UsageError("--reps must be at least 1");
  if (o.c < 2) throw UsageError("--C must be at least 2");
  if (o.t < 1 || o.k < 1 || o.k > o.t) throw UsageError("--K must lie in [1, T]");
  const int k_true = o.k_true.value_or(o.k);
  if (k_true < 1 || k_true > o.t) throw UsageError("--K-true must lie in [1, T]");
  const auto inst = generate_benchmark(o.t, o.c, k_true, o.snr, o.seed);
  int d = 0;
  for (const Segment& s : inst.truth.segments()) d = std::max(d, s.duration);
  if (o.d) d = *o.d;
  if (d < 1 || d > o.t) throw UsageError("--D must lie in [1, T]");

  double e_vit = 0.0, e_con = 0.0;
  const double ms_vit = median_ms(o.reps, [&] {
    e_vit = segmental_viterbi(inst.scores, inst.transitions, d).energy;
  });
  const double ms_con = median_ms(o.reps, [&] {
    e_con = constrained_decode(inst.scores, inst.transitions, o.k).energy;
  });
  const double measured = ms_vit / ms_con;
  const double theory = theoretical_speedup(d, o.k);

  if (o.format == Format::kCsv) {
    std::cout << "algo,median_ms,energy,measured_speedup,theoretical_speedup\n";
    std::cout << "segviterbi," << fmt("%.4f", ms_vit) << ',' << format_double(e_vit) << ','
              << fmt("%.4f", measured) << ',' << fmt("%.4f", theory) << '\n';
    std::cout << "constrained," << fmt("%.4f", ms_con) << ',' << format_double(e_con) << ','
              << fmt("%.4f", measured) << ',' << fmt("%.4f", theory) << '\n';
  } else {
    std::printf("T=%d C=%d D=%d K=%d reps=%d\n", o.t, o.c, d, o.k, o.reps);
    std::printf("%-12s %12s %20s\n", "algo", "median_ms", "energy");
    std::printf("%-12s %12.3f %20.6f\n", "segviterbi", ms_vit, e_vit);
    std::printf("%-12s %12.3f %20.6f\n", "constrained", ms_con, e_con);
    std::printf("measured speedup: %.2f\ntheoretical speedup (D/K): %.2f\n", measured, theory);
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainOptions {
  std::string data;
  std::vector<std::string> potentials{"DATA", "PAIR_CLASS"};
  std::string loss = "hamming";
  std::string reg = "l2";
  int epochs = 50;
  double c_reg = 1.0;
  double eta = 1.0;
  int batch = 1;
  int skip = 1;
  int canonical_length = 50;
  int boundary_window = 1;
  std::uint64_t seed = 0;
  std::string out;
  Format format = Format::kText;
};

int run_train(const TrainOptions& o) {
  PotentialConfig cfg;
  for (const auto& name : o.potentials) {
    const auto p = parse_potential(name);
    if (!p) throw UsageError("unknown potential '" + name + "'");
    cfg.enabled.insert(*p);
  }
  cfg.skip = o.skip;
  cfg.canonical_length = o.canonical_length;
  cfg.boundary_window = o.boundary_window;

  TrainConfig tc;
  tc.epochs = o.epochs;
  tc.c_reg = o.c_reg;
  tc.eta = o.eta;
  tc.batch_size = o.batch;
  tc.seed = o.seed;
  tc.loss = o.loss == "hamming" ? LossKind::kHamming : LossKind::kOverlap;
  static const std::map<std::string, Regularizer> regs{{"none", Regularizer::kNone},
                                                       {"l1", Regularizer::kL1},
                                                       {"l2", Regularizer::kL2},
                                                       {"nuclear", Regularizer::kNuclear}};
  tc.regularizer = regs.at(o.reg);
  try {
    tc.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }

  ClassDictionary classes;
  std::vector<Sample> data;
  for (const auto& feat : files_with_extension(o.data, ".feat")) {
    fs::path labels = feat;
    labels.replace_extension(".labels");
    if (!fs::exists(labels)) throw IoError("missing label file " + labels.string());
    FeatureSequence x = read_features(feat.string());
    LabelSequence y = read_labels(labels.string(), classes);
    if (static_cast<int>(y.size()) != x.num_frames()) {
      throw DataError(feat.string() + ": features and labels differ in length");
    }
    data.push_back({std::move(x), std::move(y)});
  }
  if (data.empty()) throw DataError("no .feat/.labels pairs in " + o.data);
  if (classes.size() < 2) throw DataError("training labels use fewer than two classes");
  cfg.num_classes = classes.size();
  cfg.feature_dim = data.front().features.feature_dim();
  try {
    cfg.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }

  const TrainResult r = load([&] { return train_ssvm(data, cfg, tc); });
  int errors = 0;
  for (const Sample& s : data)
    errors += hamming_loss(s.labels, framewise_decode(r.weights, s.features, cfg));

  if (o.format == Format::kCsv) {
    std::cout << "epoch,objective\n";
    for (std::size_t i = 0; i < r.objective.size(); ++i)
      std::cout << i + 1 << ',' << format_double(r.objective[i]) << '\n';
  } else {
    for (std::size_t i = 0; i < r.objective.size(); ++i)
      std::cout << "epoch " << i + 1 << " objective " << format_double(r.objective[i]) << '\n';
    std::cout << "classes:";
    for (const auto& n : classes.names()) std::cout << ' ' << n;
    std::cout << "\ntrain_hamming_error: " << errors << '\n';
  }
  if (!o.out.empty()) write_weights(o.out, cfg, r.weights);
  return kOk;
}

// ---------------------------------------------------------------------------
// toy
// ---------------------------------------------------------------------------

struct ToyOptions {
  ToyConfig cfg;
  std::string plot;
  Format format = Format::kText;
};

std::vector<int> segment_lengths(const Segmentation& seg) {
  std::vector<int> out;
  for (const Segment& s : seg.segments()) out.insert(out.end(), s.duration, s.duration);
  return out;
}

int run_toy(const ToyOptions& o) {
  try {
    o.cfg.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  const ToyReport r = run_toy_experiment(o.cfg);
  if (o.format == Format::kCsv) {
    std::cout << "acc_framewise,acc_without,acc_with\n"
              << fmt("%.2f", 100 * r.acc_framewise) << ',' << fmt("%.2f", 100 * r.acc_without_duration)
              << ',' << fmt("%.2f", 100 * r.acc_with_duration) << '\n';
  } else {
    std::cout << "acc_framewise: " << fmt("%.2f", 100 * r.acc_framewise) << '\n'
              << "acc_without: " << fmt("%.2f", 100 * r.acc_without_duration) << " ("
              << r.without_duration.size() << " segments)\n"
              << "acc_with: " << fmt("%.2f", 100 * r.acc_with_duration) << " ("
              << r.with_duration.size() << " segments)\n";
  }
  if (!o.plot.empty()) {
    std::ofstream out(o.plot);
    if (!out) throw IoError("cannot write " + o.plot);
    const auto y0 = segments_to_labels(r.without_duration);
    const auto y1 = segments_to_labels(r.with_duration);
    const auto l0 = segment_lengths(r.without_duration);
    const auto l1 = segment_lengths(r.with_duration);
    out << "frame,score,pred_without,pred_with,seglen_without,seglen_with\n";
    for (std::size_t t = 0; t < y0.size(); ++t) {
      out << t << ',' << format_double(r.frame_scores(t, 1)) << ',' << y0[t] << ',' << y1[t]
          << ',' << l0[t] << ',' << l1[t] << '\n';
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-Markov temporal segmentation: decode, evaluate, train, benchmark"};
  app.require_subcommand(1);
  app.fallthrough();
  Format format = Format::kText;
  app.add_option("--format", format, "Output format")
      ->transform(CLI::CheckedTransformer(kFormats, CLI::ignore_case));

  DecodeOptions dec;
  auto* decode = app.add_subcommand("decode", "Decode a score matrix into segments");
  decode->add_option("--scores", dec.scores, "Score matrix file");
  auto* trans = decode->add_option("--transitions", dec.transitions, "Transition model file");
  auto* train_segs =
      decode->add_option("--train-segments", dec.train_segments,
                         "Directory of .segments files to estimate transitions and K from");
  trans->excludes(train_segs);
  decode->add_option("--features", dec.features, "Feature file (framewise)");
  decode->add_option("--weights", dec.weights, "Weights file (framewise)");
  decode->add_option("--algo", dec.algo)
      ->check(CLI::IsMember({"segviterbi", "constrained", "framewise"}));
  decode->add_option("--K", dec.k, "Maximum number of segments");
  decode->add_option("--D", dec.d, "Maximum segment duration");
  decode->add_option("--variant", dec.variant)->check(CLI::IsMember({"sum", "mean-prior"}));
  decode->add_option("--duration", dec.duration)
      ->check(CLI::IsMember({"none", "discrete", "quadratic"}));
  decode->add_option("--duration-weights", dec.duration_weights)->delimiter(',');
  decode->add_option("--out", dec.out, "Output segments file");

  EvalOptions ev;
  auto* eval = app.add_subcommand("eval", "Score predicted segments against ground truth");
  eval->add_option("--gt", ev.gt)->required();
  eval->add_option("--pred", ev.pred)->required();
  eval->add_option("--scores", ev.scores, "Score matrix for classification accuracy");
  eval->add_option("--ignore-label", ev.ignore_label, "Class removed before scoring");

  BenchOptions be;
  auto* bench = app.add_subcommand("bench", "Time Segmental Viterbi against constrained decoding");
  bench->add_option("--T", be.t);
  bench->add_option("--C", be.c);
  bench->add_option("--K", be.k);
  bench->add_option("--D", be.d, "Duration bound (default: longest true segment)");
  bench->add_option("--K-true", be.k_true, "Segments in the generated truth (default: K)");
  bench->add_option("--reps", be.reps);
  bench->add_option("--snr", be.snr);
  bench->add_option("--seed", be.seed);

  TrainOptions tr;
  auto* train = app.add_subcommand("train", "Train framewise weights with the SSVM");
  train->add_option("--data", tr.data, "Directory of NAME.feat / NAME.labels pairs")->required();
  train->add_option("--potentials", tr.potentials)->delimiter(',');
  train->add_option("--loss", tr.loss)->check(CLI::IsMember({"hamming", "overlap"}));
  train->add_option("--reg", tr.reg)->check(CLI::IsMember({"none", "l1", "l2", "nuclear"}));
  train->add_option("--epochs", tr.epochs);
  train->add_option("--C", tr.c_reg, "Hinge trade-off constant");
  train->add_option("--eta", tr.eta, "Adagrad base step");
  train->add_option("--batch", tr.batch);
  train->add_option("--skip", tr.skip, "Pairwise skip length");
  train->add_option("--canonical-length", tr.canonical_length);
  train->add_option("--boundary-window", tr.boundary_window);
  train->add_option("--seed", tr.seed);
  train->add_option("--out", tr.out, "Output weights file");

  ToyOptions to;
  auto* toy = app.add_subcommand("toy", "Run the sine-wave duration experiment");
  toy->add_option("--seed", to.cfg.seed);
  toy->add_option("--segment-length", to.cfg.segment_length);
  toy->add_option("--phase-shift", to.cfg.phase_shift);
  toy->add_option("--offset", to.cfg.offset);
  toy->add_option("--cycles", to.cfg.cycles_per_segment);
  toy->add_option("--noise-sd", to.cfg.noise_sd);
  toy->add_option("--train-instances", to.cfg.num_train_instances);
  toy->add_option("--plot", to.plot, "Per-frame plot data file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*decode) return (dec.format = format, run_decode(dec));
    if (*eval) return (ev.format = format, run_eval(ev));
    if (*bench) return (be.format = format, run_bench(be));
    if (*train) return (tr.format = format, run_train(tr));
    if (*toy) return (to.format = format, run_toy(to));
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const UnsupportedConfig& e) {
    std::cerr << "unsupported: " << e.what() << '\n';
    return kUsage;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kData;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kData;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const DimensionError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
