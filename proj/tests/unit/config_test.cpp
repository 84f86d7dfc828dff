#include "qesgd/config.hpp"

#include <string>

#include <gtest/gtest.h>

namespace qesgd {
namespace {

std::string all_messages(const ConfigError& e) {
  std::string out;
  for (const auto& d : e.diagnostics()) out += std::to_string(d.line) + ": " + d.message + "\n";
  return out;
}

ConfigError parse_error(std::string_view text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e;
  }
  ADD_FAILURE() << "expected a ConfigError for:\n" << text;
  return ConfigError({});
}

TEST(ParseConfig, MinimalUsesDefaults) {
  const auto c = parse_config("[problem]\nkind = ridge\n[method]\nname = qesgd\n");
  EXPECT_EQ(c, ExperimentConfig{});
  EXPECT_EQ(c.method.eta0, 0.05);
  EXPECT_EQ(c.method.bits_max, 16);
  EXPECT_EQ(c.method.delta_rule, DeltaRule::kPractical);
  EXPECT_EQ(c.method.c, 3.0);
  EXPECT_EQ(c.run.epochs, 50);
  EXPECT_EQ(c.run.seeds, std::vector<std::uint64_t>{1});
  EXPECT_EQ(parse_config(""), ExperimentConfig{});
}

TEST(ParseConfig, FullExample) {
  const auto c = parse_config(R"(# experiment
[problem]
kind = logistic-l2   ; inline comment
n = 200
d = 5
lambda = 0.1
seed = 3

[method]
name = sgd, qesgd, qsgd
eta0 = 0.5
K_rule = fixed
K = 7
bits_rule = fixed
bits = 4
bits_max = 8
delta_rule = fixed
delta = 1e-4
bucket_size = 64
qsgd_delta = scaled
averaging = skip-anchor

[run]
T = 12
seeds = 1, 2, 3
p = 4
B = 8
report_every = 5

[output]
dir = results/a
emission = per-step
trace = true
fit_window = 2 10
)");
  EXPECT_EQ(c.problem.kind, ProblemKind::kLogisticL2);
  EXPECT_EQ(c.problem.n, 200u);
  EXPECT_EQ(c.problem.lambda, 0.1);
  ASSERT_EQ(c.method.names.size(), 3u);
  EXPECT_EQ(c.method.names[2], MethodKind::kQsgd);
  EXPECT_EQ(c.method.epoch_rule, EpochLengthRule::kFixed);
  EXPECT_EQ(c.method.K, 7);
  EXPECT_EQ(c.method.bits, 4);
  EXPECT_EQ(c.method.delta_rule, DeltaRule::kFixed);
  EXPECT_EQ(c.method.delta, 1e-4);
  EXPECT_EQ(c.method.bucket_size, std::optional<std::size_t>{64});
  EXPECT_EQ(c.method.qsgd_delta, QsgdDelta::kScaledNorm);
  EXPECT_EQ(c.method.averaging, Averaging::kSkipAnchor);
  EXPECT_EQ(c.run.seeds, (std::vector<std::uint64_t>{1, 2, 3}));
  EXPECT_EQ(c.run.workers, 4u);
  EXPECT_EQ(c.run.batch_size, 8u);
  EXPECT_EQ(c.output.dir, "results/a");
  EXPECT_EQ(c.output.emission, Emission::kPerStep);
  EXPECT_TRUE(c.output.trace);
  EXPECT_EQ(c.output.fit_lo, 2);
  EXPECT_EQ(c.output.fit_hi, 10);
}

TEST(ParseConfig, BitsOutOfRangeNamesLimit) {
  const auto e = parse_error("[method]\nbits = 40\n");
  ASSERT_EQ(e.diagnostics().size(), 1u);
  EXPECT_EQ(e.diagnostics()[0].line, 2u);
  EXPECT_NE(e.diagnostics()[0].message.find("bits_max = 16"), std::string::npos);
}

TEST(ParseConfig, ExactDeltaNeedsMu) {
  const auto e = parse_error(
      "[problem]\nkind = logistic-l2\nlambda = 0\n[method]\nname = qesgd\n"
      "delta_rule = lemma2-exact\nK_rule = fixed\n");
  const auto text = all_messages(e);
  EXPECT_NE(text.find("6: delta_rule = lemma2-exact needs the problem constant mu"),
            std::string::npos)
      << text;
}

TEST(ParseConfig, ReportsEveryProblemWithLines) {
  const auto e = parse_error(
      "[problem]\nn = -3\ncolour = red\n[method]\nname = adam\nname = sgd\n[extra]\nx = 1\n"
      "[run]\nT\n");
  const auto& d = e.diagnostics();
  ASSERT_EQ(d.size(), 6u) << all_messages(e);
  EXPECT_EQ(d[0].line, 2u);
  EXPECT_EQ(d[1].line, 3u);
  EXPECT_NE(d[1].message.find("unknown key problem.colour"), std::string::npos);
  EXPECT_EQ(d[2].line, 5u);
  EXPECT_NE(d[2].message.find("adam"), std::string::npos);
  EXPECT_EQ(d[3].line, 6u);
  EXPECT_NE(d[3].message.find("duplicate"), std::string::npos);
  EXPECT_EQ(d[4].line, 7u);
  EXPECT_EQ(d[5].line, 10u);
  EXPECT_NE(std::string(e.what()).find("line 3: unknown key problem.colour"), std::string::npos);
}

TEST(ParseConfig, CrossFieldChecks) {
  EXPECT_NE(all_messages(parse_error("[method]\nbits_max = 6\nbits = 8\n")).find("exceeds bits_max = 6"),
            std::string::npos);
  EXPECT_NE(all_messages(parse_error("[problem]\nn = 5\nd = 10\n")).find("n >= d"),
            std::string::npos);
  EXPECT_NE(all_messages(parse_error("[run]\nT = 5\n[output]\nfit_window = 2 9\n")).find("fit window"),
            std::string::npos);
  EXPECT_NE(all_messages(parse_error("[problem]\nkind = logistic-l2\n")).find("lambda > 0"),
            std::string::npos);
  EXPECT_NO_THROW(parse_config("[run]\nT = 5\n[output]\nfit_window = 1 -1\n"));
}

TEST(ParseConfig, TypeAndRangeErrors) {
  for (const char* text : {"[problem]\nlambda = abc\n", "[method]\neta0 = 0\n",
                           "[method]\nbucket_size = 0\n", "[run]\np = 65535\n", "[run]\nseeds =\n",
                           "[output]\ntrace = yes\n", "[method]\nK = 1.5\n", "oops = 1\n",
                           "[problem\n"}) {
    EXPECT_THROW(parse_config(text), ConfigError) << text;
  }
}

TEST(SerializeConfig, RoundTripIsIdempotent) {
  ExperimentConfig c;
  c.problem.kind = ProblemKind::kLogisticL2;
  c.problem.lambda = 0.1;
  c.problem.noise = 0.123456789012345;
  c.method.names = {MethodKind::kEpochSgd, MethodKind::kQesgd};
  c.method.bucket_size = 32;
  c.method.delta = 3.3e-9;
  c.run.total_steps = 1000;
  c.run.seeds = {4, 5};
  c.output.fit_hi = 40;
  const auto text = serialize_config(c);
  const auto back = parse_config(text);
  EXPECT_EQ(back, c);
  EXPECT_EQ(serialize_config(back), text);
  EXPECT_EQ(parse_config(serialize_config(ExperimentConfig{})), ExperimentConfig{});
}

TEST(LoadConfig, MissingFile) {
  EXPECT_THROW(load_config("/nonexistent/qesgd.ini"), std::runtime_error);
}

}  // namespace
}  // namespace qesgd
