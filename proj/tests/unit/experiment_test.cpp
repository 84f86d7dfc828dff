#include "qesgd/experiment.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include <gtest/gtest.h>

#include "qesgd/compare.hpp"
#include "qesgd/config.hpp"

namespace qesgd {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::path(::testing::TempDir()) / ("qesgd_" + name);
  fs::remove_all(dir);
  return dir;
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.problem.n = 200;
  c.problem.d = 6;
  c.problem.condition_target = 10;
  c.method.names = {MethodKind::kSgd, MethodKind::kEpochSgd, MethodKind::kQesgd,
                    MethodKind::kQsgd};
  c.method.eta0 = 0.1;
  c.method.epoch_rule = EpochLengthRule::kFixed;
  c.method.K = 25;
  c.run.epochs = 12;
  c.run.seeds = {1, 2, 3};
  c.run.workers = 2;
  c.run.batch_size = 2;
  c.output.fit_lo = 2;
  c.output.trace = true;
  return c;
}

TEST(TrajectoryCsv, GoldenFile) {
  TrajectoryRecord traj;
  traj.append_anchor({0, 0, 0.05, 3, 8, 0.001, 1.5, 0.25, 0, 0}, Vector::Zero(2));
  traj.append({0, 1, 0.05, 3, 8, 0.001, 1.25, 0.125, 96, 96});
  traj.append_anchor({1, 0, 0.025, 6, 9, 0.001 / std::sqrt(8.0), 0.1, 1e-20, 288, 288},
                     Vector::Zero(2));
  std::ostringstream os;
  write_trajectory_csv(os, traj);
  const auto golden = slurp(fs::path(QESGD_TEST_DATA_DIR) / "golden_trajectory.csv");
  EXPECT_EQ(os.str(), golden);

  std::istringstream is(golden);
  const auto rows = read_trajectory_csv(is);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[2].delta, 0.001 / std::sqrt(8.0));
  EXPECT_EQ(rows[1].downlink_bytes, 96u);
  std::istringstream bad("t,k\n1,2\n");
  EXPECT_THROW(read_trajectory_csv(bad), std::invalid_argument);
}

TEST(RunExperiment, ZeroEpochsGivesInitialRow) {
  ExperimentConfig c;
  c.problem.n = 100;
  c.problem.d = 4;
  c.run.epochs = 0;
  c.output.fit_hi = -1;
  const auto result = run_experiment(c, std::nullopt);
  ASSERT_EQ(result.methods.size(), 1u);
  const auto& rows = result.methods[0].median_rows;
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].t, 0);
  const auto spec = build_problem(c.problem);
  EXPECT_DOUBLE_EQ(rows[0].suboptimality, full_objective(spec, Vector::Zero(4)) - spec.f_star());
  EXPECT_TRUE(std::isnan(result.methods[0].summary.slope));
  EXPECT_TRUE(result.files.empty());
}

TEST(RunExperiment, WritesDeterministicFiles) {
  const auto c = small_config();
  const auto a = run_experiment(c, fresh_dir("det_a"));
  const auto b = run_experiment(c, fresh_dir("det_b"));
  ASSERT_EQ(a.files.size(), 4u * 3u + 3u + 1u);
  ASSERT_EQ(a.files.size(), b.files.size());
  for (std::size_t i = 0; i < a.files.size(); ++i) {
    EXPECT_EQ(a.files[i].filename(), b.files[i].filename());
    EXPECT_EQ(slurp(a.files[i]), slurp(b.files[i])) << a.files[i];
  }
  const auto dir = a.files.front().parent_path();
  EXPECT_TRUE(fs::exists(dir / "epoch-sgd_seed2.csv"));
  EXPECT_TRUE(fs::exists(dir / "qesgd_seed3.trace"));
  const auto summary = read_summary_csv(dir / "summary.csv");
  ASSERT_EQ(summary.size(), 4u);
  EXPECT_EQ(summary[2].method, "qesgd");
  EXPECT_EQ(summary[2].problem_id, problem_id(c.problem));
  EXPECT_EQ(summary[0].bits, 32);
  EXPECT_EQ(summary[3].bits, 8);
  EXPECT_EQ(summary[2].rounds, 12u * 25u);
  for (const auto& s : summary) {
    EXPECT_EQ(s.seeds, 3u);
    EXPECT_LT(s.final_suboptimality, s.initial_suboptimality) << s.method;
  }
  const auto rows = read_trajectory_csv(dir / "qesgd_seed1.csv");
  ASSERT_EQ(rows.size(), 13u);
  EXPECT_GT(rows.back().uplink_bytes, 0u);
}

TEST(RunExperiment, ModeledBytesForDenseMethods) {
  auto c = small_config();
  c.method.names = {MethodKind::kEpochSgd};
  c.run.seeds = {1};
  const auto r = run_experiment(c, std::nullopt).methods[0].summary;
  const std::uint64_t per_round = 2u * (16u + 4u * 6u);
  EXPECT_EQ(r.uplink_bytes, 300u * per_round);
  EXPECT_EQ(r.downlink_bytes, 300u * per_round);
}

TEST(SummaryCsv, RoundTrip) {
  MethodSummary a{"qesgd", "ridge-x", 5, 8, 1.5, 2.5e-7, -1.25, 0.97, 1000, 300, 42};
  MethodSummary b{"sgd", "ridge-x", 5, 32, 1.5, 1e-6, std::nan(""), std::nan(""), 1, 2, 3};
  std::stringstream ss;
  write_summary_csv(ss, {a, b});
  EXPECT_EQ(ss.str().substr(0, kSummaryCsvHeader.size()), kSummaryCsvHeader);
  const auto back = read_summary_csv(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0], a);
  EXPECT_EQ(back[1].method, "sgd");
  EXPECT_TRUE(std::isnan(back[1].slope));
  EXPECT_TRUE(std::isnan(back[1].r2));
  EXPECT_EQ(back[1].rounds, 3u);
}

TEST(ProblemId, DescribesProblem) {
  ProblemBlock p;
  p.noise = 0.3;
  EXPECT_EQ(problem_id(p), "ridge-n1000-d20-cond50-lambda0-noise0.3-seed7");
  p.data = "/tmp/x/train.csv";
  p.lambda = 0.5;
  EXPECT_EQ(problem_id(p), "ridge-csv-train.csv-lambda0.5");
}

TEST(CompareMethods, IdenticalMethodsGiveIdenticalRows) {
  const MethodSummary s{"qesgd", "p", 3, 8, 1.0, 1e-4, -1.0, 0.9, 100, 50, 10};
  const auto report = compare_methods({s, s});
  ASSERT_EQ(report.rows.size(), 2u);
  EXPECT_EQ(report.baseline, "qesgd");
  EXPECT_EQ(report.problem_id, "p");
  for (const auto& r : report.rows) {
    EXPECT_EQ(r.suboptimality_ratio, 1.0);
    EXPECT_EQ(r.downlink_compression, 1.0);
    EXPECT_EQ(r.total_compression, 1.0);
  }
  const auto md = to_markdown(report);
  EXPECT_NE(md.find("| qesgd |"), std::string::npos) << md;
  const auto csv = to_csv(report);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST(CompareMethods, Errors) {
  const MethodSummary a{"sgd", "p1", 1, 32, 1, 1, 0, 0, 1, 1, 1};
  auto b = a;
  b.problem_id = "p2";
  EXPECT_THROW(compare_methods({a}), std::invalid_argument);
  EXPECT_THROW(compare_methods({a, b}), std::invalid_argument);
}

TEST(CompareMethods, DownlinkCompressionApproachesWordRatio) {
  ExperimentConfig c;
  c.problem.n = 1000;
  c.problem.d = 1000;
  c.problem.condition_target = 10;
  c.method.names = {MethodKind::kSgd, MethodKind::kQesgd};
  c.method.epoch_rule = EpochLengthRule::kFixed;
  c.method.K = 400;
  c.method.bits_rule = BitsRule::kFixed;
  c.method.bits = 8;
  c.run.epochs = 2;
  c.output.fit_hi = -1;
  std::vector<MethodSummary> summaries;
  for (const auto& m : run_experiment(c, std::nullopt).methods) summaries.push_back(m.summary);
  const auto report = compare_methods(summaries);
  // 4016 bytes per dense broadcast vs 1019 per z frame plus one anchor per 400 rounds
  EXPECT_NEAR(report.rows[1].downlink_compression, 32.0 / 8.0, 0.04 * 4.0);
  EXPECT_EQ(report.rows[1].uplink_bytes, report.rows[0].uplink_bytes);
}

}  // namespace
}  // namespace qesgd
