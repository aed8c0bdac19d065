#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "semiseg/data_io.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace semiseg;

namespace {

struct RunResult {
  int code;
  std::string out;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("semiseg_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
  }

  std::string read(const std::string& name) const {
    std::ifstream in(path(name));
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  RunResult run(const std::string& args) const {
    const std::string out = path("stdout.txt");
    const std::string cmd = std::string(SEMISEG_CLI) + " " + args + " > " + out + " 2> " +
                            path("stderr.txt");
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read("stdout.txt")};
  }

  static double field(const std::string& out, const std::string& key) {
    const auto pos = out.find(key);
    if (pos == std::string::npos) return std::nan("");
    return std::stod(out.substr(pos + key.size()));
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, ConstrainedWithOneSegment) {
  std::mt19937_64 rng(1);
  write_scores(path("s.csv"), semiseg::testing::random_scores(rng, 15, 3),
               ClassDictionary::numbered(3));
  write_transitions(path("a.txt"), semiseg::testing::random_transitions(rng, 3));
  const auto r = run("decode --scores " + path("s.csv") + " --transitions " + path("a.txt") +
                     " --algo constrained --K 1 --out " + path("p.seg"));
  ASSERT_EQ(r.code, 0);
  ClassDictionary classes;
  EXPECT_EQ(read_segments(path("p.seg"), classes).size(), 1u);
  EXPECT_NE(r.out.find("segments: 1"), std::string::npos);
}

TEST_F(Cli, UnconstrainedAlgorithmsAgree) {
  std::mt19937_64 rng(2);
  const int T = 20;
  write_scores(path("s.csv"), semiseg::testing::random_scores(rng, T, 3),
               ClassDictionary::numbered(3));
  write_transitions(path("a.txt"), semiseg::testing::random_transitions(rng, 3));
  const std::string base = "decode --scores " + path("s.csv") + " --transitions " + path("a.txt");
  const auto a = run(base + " --algo constrained --K " + std::to_string(T));
  const auto b = run(base + " --algo segviterbi --D " + std::to_string(T));
  ASSERT_EQ(a.code, 0);
  ASSERT_EQ(b.code, 0);
  EXPECT_NEAR(field(a.out, "energy: "), field(b.out, "energy: "), 1e-6);
}

TEST_F(Cli, DecodeUsageErrors) {
  write("s.csv", "1,0\n0,1\n");
  write("a.txt", "[LOG_TRANSITION]\n-inf,0\n0,-inf\n[LOG_PRIOR]\n0,0\n");
  const std::string base = "decode --scores " + path("s.csv") + " --transitions " + path("a.txt");
  EXPECT_EQ(run(base + " --algo segviterbi").code, 1);
  EXPECT_EQ(run(base + " --algo constrained").code, 1);
  EXPECT_EQ(run(base + " --algo nope --K 1").code, 1);
  EXPECT_EQ(run(base + " --K 1 --train-segments " + path("")).code, 1);
  EXPECT_EQ(run(base + " --K 1 --duration quadratic").code, 1);
  EXPECT_EQ(run("").code, 1);
}

TEST_F(Cli, DecodeDataErrorsAndInfeasibility) {
  write("bad.csv", "1,0\n0,x\n");
  write("s.csv", "1,0\n0,1\n0,1\n");
  write("a.txt", "[LOG_TRANSITION]\n-inf,0\n0,-inf\n[LOG_PRIOR]\n0,0\n");
  write("blocked.txt", "[LOG_TRANSITION]\n-inf,-inf\n-inf,-inf\n[LOG_PRIOR]\n0,0\n");
  EXPECT_EQ(run("decode --scores " + path("bad.csv") + " --transitions " + path("a.txt") + " --K 1")
                .code,
            2);
  EXPECT_EQ(run("decode --scores " + path("missing.csv") + " --transitions " + path("a.txt") +
                " --K 1")
                .code,
            2);
  EXPECT_EQ(run("decode --scores " + path("s.csv") + " --transitions " + path("blocked.txt") +
                " --algo segviterbi --D 2")
                .code,
            3);
}

TEST_F(Cli, DecodeWithTrainingSegments) {
  fs::create_directories(path("train"));
  write("train/a.segments", "walk,0,3\nrun,3,2\nwalk,5,4\n");
  write("train/b.segments", "run,0,3\nwalk,3,2\n");
  write("s.csv", "walk,run\n5,0\n5,0\n0,5\n0,5\n5,0\n5,0\n");
  const auto r = run("decode --scores " + path("s.csv") + " --train-segments " + path("train") +
                     " --out " + path("p.seg"));
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(read("p.seg"), "walk,0,2\nrun,2,2\nwalk,4,2\n");
}

TEST_F(Cli, EvalReportsPercentages) {
  write("gt.seg", "A,0,3\nB,3,3\nC,6,3\n");
  write("pred.seg", "A,0,5\nC,5,4\n");
  const auto same = run("eval --gt " + path("gt.seg") + " --pred " + path("gt.seg"));
  ASSERT_EQ(same.code, 0);
  EXPECT_EQ(same.out, "Edit: 100.00 Acc: 100.00\n");
  const auto diff = run("eval --gt " + path("gt.seg") + " --pred " + path("pred.seg"));
  ASSERT_EQ(diff.code, 0);
  EXPECT_NE(diff.out.find("Edit: 66.67"), std::string::npos);
  EXPECT_EQ(run("eval --gt " + path("gt.seg") + " --pred " + path("nope.seg")).code, 2);
  write("short.seg", "A,0,3\n");
  EXPECT_EQ(run("eval --gt " + path("gt.seg") + " --pred " + path("short.seg")).code, 2);
}

TEST_F(Cli, EvalWithScoresAndCsv) {
  write("gt.seg", "A,0,2\nB,2,2\n");
  write("s.csv", "A,B\n1,0\n1,0\n1,0\n0,3\n");
  const auto r = run("--format csv eval --gt " + path("gt.seg") + " --pred " + path("gt.seg") +
                     " --scores " + path("s.csv"));
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "edit,accuracy,classification\n100.00,100.00,100.00\n");
}

TEST_F(Cli, EvalIgnoreLabel) {
  write("gt.seg", "bg,0,2\nA,2,2\nbg,4,1\nB,5,2\n");
  write("pred.seg", "A,0,4\nB,4,3\n");
  const auto r = run("eval --gt " + path("gt.seg") + " --pred " + path("pred.seg") +
                     " --ignore-label bg");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "Edit: 100.00 Acc: 100.00\n");
  EXPECT_EQ(run("eval --gt " + path("gt.seg") + " --pred " + path("pred.seg") +
                " --ignore-label zzz")
                .code,
            1);
}

TEST_F(Cli, BenchPrintsTheoreticalRatio) {
  const auto r = run("--format csv bench --T 400 --C 3 --K 7 --D 230 --reps 1");
  ASSERT_EQ(r.code, 0);
  std::istringstream lines(r.out);
  std::string header, row1, row2, extra;
  std::getline(lines, header);
  std::getline(lines, row1);
  std::getline(lines, row2);
  EXPECT_EQ(header, "algo,median_ms,energy,measured_speedup,theoretical_speedup");
  EXPECT_FALSE(std::getline(lines, extra));
  EXPECT_NEAR(std::stod(row1.substr(row1.rfind(',') + 1)), 32.857, 0.01);
}

TEST_F(Cli, BenchEnergiesAgreeWhenBoundsDoNotBind) {
  const auto r = run("--format csv bench --T 600 --C 4 --K 12 --snr 50 --reps 1 --seed 3");
  ASSERT_EQ(r.code, 0);
  std::istringstream lines(r.out);
  std::string header, vit, con;
  std::getline(lines, header);
  std::getline(lines, vit);
  std::getline(lines, con);
  auto energy = [](const std::string& row) {
    std::vector<std::string> cells;
    std::stringstream ss(row);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    return std::stod(cells.at(2));
  };
  EXPECT_NEAR(energy(vit), energy(con), 1e-6);
}

TEST_F(Cli, BenchRejectsZeroReps) { EXPECT_EQ(run("bench --reps 0").code, 1); }

TEST_F(Cli, TrainSeparableData) {
  fs::create_directories(path("data"));
  std::mt19937_64 rng(4);
  for (int n = 0; n < 4; ++n) {
    auto y = semiseg::testing::random_labels(rng, 10, 2);
    y[0] = 0;
    std::string feat, labels;
    for (int t = 0; t < 10; ++t) {
      feat += y[t] == 0 ? "10\n" : "-10\n";
      labels += y[t] == 0 ? "left\n" : "right\n";
    }
    write("data/s" + std::to_string(n) + ".feat", feat);
    write("data/s" + std::to_string(n) + ".labels", labels);
  }
  const std::string args = "train --data " + path("data") +
                           " --potentials DATA --epochs 20 --C 10 --seed 7 --out ";
  const auto r = run(args + path("w1.txt"));
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("train_hamming_error: 0\n"), std::string::npos);
  ASSERT_EQ(run(args + path("w2.txt")).code, 0);
  EXPECT_EQ(read("w1.txt"), read("w2.txt"));
  EXPECT_NO_THROW(read_weights(path("w1.txt")));

  write("x.feat", "10\n-10\n");
  const auto d = run("decode --algo framewise --features " + path("x.feat") + " --weights " +
                     path("w1.txt") + " --out " + path("fw.seg"));
  ASSERT_EQ(d.code, 0);
  EXPECT_EQ(read("fw.seg"), "c0,0,1\nc1,1,1\n");
}

TEST_F(Cli, TrainErrors) {
  fs::create_directories(path("data"));
  write("data/a.feat", "1\n2\n3\n");
  write("data/a.labels", "x\ny\n");
  EXPECT_EQ(run("train --data " + path("data") + " --potentials DATA,DEEP").code, 1);
  EXPECT_EQ(run("train --data " + path("data") + " --potentials DATA").code, 2);
}

TEST_F(Cli, ToyDefaultRun) {
  const auto r = run("toy --plot " + path("plot1.csv"));
  ASSERT_EQ(r.code, 0);
  EXPECT_DOUBLE_EQ(field(r.out, "acc_with: "), 100.0);
  EXPECT_LT(field(r.out, "acc_without: "), 100.0);
  ASSERT_EQ(run("toy --plot " + path("plot2.csv")).code, 0);
  const std::string plot = read("plot1.csv");
  EXPECT_EQ(plot, read("plot2.csv"));
  EXPECT_EQ(plot.substr(0, plot.find('\n')),
            "frame,score,pred_without,pred_with,seglen_without,seglen_with");
  EXPECT_EQ(std::count(plot.begin(), plot.end(), '\n'), 101);
}
