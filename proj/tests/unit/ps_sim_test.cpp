#include "qesgd/ps_sim.hpp"

#include <vector>

#include <gtest/gtest.h>

#include "qesgd/codec.hpp"
#include "qesgd/quant.hpp"

namespace qesgd {
namespace {

ProblemSpec ridge(std::size_t d, std::uint64_t seed = 5) {
  SyntheticOptions o;
  o.n = 400;
  o.d = d;
  o.condition_target = 20;
  o.noise = 0.2;
  o.seed = seed;
  return gen_synthetic(o);
}

ScheduleParams schedule(const ProblemSpec& spec) {
  ScheduleParams s;
  s.eta0 = 0.1;
  s.bits_max = 8;
  s.bind_problem(spec, Vector::Zero(static_cast<Eigen::Index>(spec.d())));
  return s;
}

ScheduleParams short_epochs(const ProblemSpec& spec, std::int64_t K) {
  auto s = schedule(spec);
  s.epoch_rule = EpochLengthRule::kFixed;
  s.fixed_epoch_length = K;
  return s;
}

TEST(RunDistributed, SingleWorkerMatchesQesgd) {
  const auto spec = ridge(8);
  const auto s = schedule(spec);
  DistributedOptions d;
  d.epochs = 6;
  d.seed = 3;
  d.emission = Emission::kPerStep;
  QesgdOptions q;
  q.run.epochs = 6;
  q.run.seed = 3;
  q.run.emission = Emission::kPerStep;
  const auto a = run_distributed(spec, s, d).trajectory;
  const auto b = run_qesgd(spec, s, q);
  ASSERT_EQ(a.rows().size(), b.rows().size());
  for (std::size_t i = 0; i < a.rows().size(); ++i) {
    ASSERT_EQ(a.rows()[i].suboptimality, b.rows()[i].suboptimality) << i;
  }
  for (std::size_t t = 0; t < a.anchors().size(); ++t) EXPECT_EQ(a.anchors()[t], b.anchors()[t]);
}

TEST(RunDistributed, TrajectoryIndependentOfWorkerCount) {
  const auto spec = ridge(10);
  const auto s = schedule(spec);
  std::vector<Vector> finals;
  for (std::size_t p : {1, 2, 4}) {
    DistributedOptions d;
    d.epochs = 5;
    d.workers = p;
    d.batch_size = 4;
    d.seed = 9;
    finals.push_back(run_distributed(spec, s, d).trajectory.final_point());
  }
  EXPECT_LE((finals[0] - finals[1]).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((finals[0] - finals[2]).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(RunDistributed, MeterMatchesLogReplay) {
  const auto spec = ridge(6);
  DistributedOptions d;
  d.epochs = 3;
  d.workers = 3;
  d.batch_size = 5;
  d.keep_log = true;
  const auto r = run_distributed(spec, short_epochs(spec, 4), d);
  const auto replay = replay_meter(r.log);
  EXPECT_EQ(replay.uplink_bytes(), r.meter.uplink_bytes());
  EXPECT_EQ(replay.downlink_bytes(), r.meter.downlink_bytes());
  EXPECT_EQ(r.rounds, 12u);
  EXPECT_EQ(r.meter.uplink_bytes(), 12u * 3u * dense_message_size(6));
  EXPECT_EQ(r.anchor_downlink_bytes, 3u * 3u * dense_message_size(6));
  EXPECT_EQ(r.z_downlink_bytes + r.anchor_downlink_bytes, r.meter.downlink_bytes());
  EXPECT_EQ(r.trajectory.last().uplink_bytes, r.meter.uplink_bytes());
  for (const auto& e : r.log) {
    if (e.direction == Direction::kDownlink) EXPECT_EQ(e.fanout, 3);
  }
}

TEST(RunDistributed, ZeroEpochs) {
  const auto spec = ridge(4);
  const auto r = run_distributed(spec, schedule(spec), DistributedOptions{});
  EXPECT_EQ(r.rounds, 0u);
  EXPECT_EQ(r.meter.total_bytes(), 0u);
  EXPECT_EQ(r.trajectory.rows().size(), 1u);
}

TEST(ServerState, SummedPushMatchesSplitPushes) {
  const auto spec = ridge(5);
  const auto s = schedule(spec);
  std::vector<PushGradient> four;
  Vector sum = Vector::Zero(5);
  for (std::uint32_t j = 0; j < 4; ++j) {
    Vector g = Vector::Constant(5, 0.1 * (j + 1));
    g[j] = -0.3;
    sum += g;
    four.push_back({j, 0, g});
  }
  ServerState many(spec, s, 4, 4, 2);
  ServerState one(spec, s, 1, 4, 2);
  many.begin_epoch(0);
  one.begin_epoch(0);
  const PushGradient single{0, 0, sum};
  const auto a = many.server_round(four);
  const auto b = one.server_round({&single, 1});
  EXPECT_EQ(a.frames, b.frames);
  EXPECT_EQ(many.z(), one.z());
}

TEST(ServerState, ZeroGradientsKeepGridPoint) {
  const auto spec = ridge(5);
  ServerState server(spec, schedule(spec), 1, 1, 4);
  const auto& plan = server.begin_epoch(0);
  const QuantGrid grid(plan.delta, plan.bits);
  server.server_round(std::vector<PushGradient>{{0, 0, Vector::Constant(5, 0.7)}});
  const Vector z = server.z();
  for (double v : z) EXPECT_TRUE(grid.contains(v));
  server.server_round(std::vector<PushGradient>{{0, 1, Vector::Zero(5)}});
  EXPECT_EQ(server.z(), z);
}

TEST(ServerState, ProtocolErrors) {
  const auto spec = ridge(3);
  ServerState server(spec, short_epochs(spec, 2), 2, 2, 1);
  EXPECT_THROW(server.server_round({}), ProtocolError);
  EXPECT_THROW(server.begin_epoch(1), ProtocolError);
  server.begin_epoch(0);
  const Vector g = Vector::Ones(3);
  EXPECT_THROW(server.server_round(std::vector<PushGradient>{{0, 0, g}}), ProtocolError);
  EXPECT_THROW(server.server_round(std::vector<PushGradient>{{0, 0, g}, {0, 0, g}}), ProtocolError);
  EXPECT_THROW(server.server_round(std::vector<PushGradient>{{0, 0, g}, {2, 0, g}}), ProtocolError);
  EXPECT_THROW(server.server_round(std::vector<PushGradient>{{0, 0, g}, {1, 1, g}}), ProtocolError);
  EXPECT_THROW(server.server_round(std::vector<PushGradient>{{0, 0, g}, {1, 0, Vector::Ones(2)}}),
               ProtocolError);
  EXPECT_THROW(server.end_epoch(), ProtocolError);
  server.server_round(std::vector<PushGradient>{{1, 0, g}, {0, 0, g}});
  server.server_round(std::vector<PushGradient>{{0, 1, g}, {1, 1, g}});
  EXPECT_THROW(server.server_round(std::vector<PushGradient>{{0, 2, g}, {1, 2, g}}), ProtocolError);
  const auto anchor = server.end_epoch();
  EXPECT_EQ(anchor.epoch, 1u);
  EXPECT_NO_THROW(server.begin_epoch(1));
  EXPECT_THROW(ServerState(spec, schedule(spec), 0, 1, 1), std::invalid_argument);
  EXPECT_THROW(ServerState(spec, schedule(spec), 1, 0, 1), std::invalid_argument);
}

TEST(WorkerState, EmptyAndSingleSampleBatches) {
  const auto spec = ridge(4);
  WorkerState worker(0, spec);
  const auto empty = worker.compute({});
  EXPECT_TRUE(empty.g.isZero(0.0));
  EXPECT_EQ(empty.round, 0u);

  WorkerState w2(1, spec, Vector::Constant(4, 0.5));
  const std::vector<std::size_t> one = {17};
  Vector expected = Vector::Zero(4);
  accumulate_sample_gradient(spec, 17, Vector::Constant(4, 0.5), expected);
  EXPECT_EQ(w2.compute(one).g, expected);
}

TEST(WorkerState, DisjointBatchesSumToUnion) {
  const auto spec = ridge(6);
  const Vector w0 = Vector::Constant(6, -0.4);
  WorkerState a(0, spec, w0), b(1, spec, w0), all(2, spec, w0);
  const std::vector<std::size_t> left = {1, 5, 9}, right = {2, 3}, both = {1, 5, 9, 2, 3};
  const Vector sum = a.compute(left).g + b.compute(right).g;
  EXPECT_LE((sum - all.compute(both).g).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(WorkerState, OrderingErrors) {
  const auto spec = ridge(4);
  ServerState server(spec, schedule(spec), 1, 1, 1);
  server.begin_epoch(0);
  WorkerState worker(0, spec);
  const auto push = worker.compute({});
  EXPECT_THROW(worker.compute({}), ProtocolError);
  EXPECT_THROW(worker.receive(BroadcastEpochAnchor{1, Vector::Zero(4)}), ProtocolError);
  const auto bz = server.server_round({&push, 1});
  EXPECT_THROW(worker.receive(BroadcastZ{bz.round + 1, bz.frames}), ProtocolError);
  const std::vector<std::size_t> batch = {0};
  const auto next = worker_round(worker, bz, batch);
  EXPECT_EQ(next.round, 1u);
  EXPECT_EQ(worker.z(), server.z());
  EXPECT_THROW(worker.receive(bz), ProtocolError);
  EXPECT_THROW(worker.receive(BroadcastEpochAnchor{1, Vector::Zero(3)}), ProtocolError);
}

TEST(Communication, DownlinkRatioAtThousandDims) {
  EXPECT_EQ(encoded_size(1000, 8), 1019u);
  EXPECT_NEAR(1019.0 / 4016.0, 0.254, 5e-4);
}

TEST(Communication, IdealSpeedup) {
  EXPECT_EQ(ideal_speedup(8), 1.6);
  EXPECT_EQ(ideal_speedup(32), 1.0);
  EXPECT_DOUBLE_EQ(ideal_speedup(4), 16.0 / 9.0);
}

TEST(Communication, Report) {
  ByteMeter m;
  m.record(Direction::kUplink, 0, 400);
  m.record(Direction::kDownlink, 0, 100);
  const auto r = communication_report(m, full_precision_baseline(2, 2, 24), 8);
  // baseline: 2 rounds * 2 workers * (16 + 96) bytes each way
  EXPECT_DOUBLE_EQ(r.downlink_ratio, 100.0 / 448.0);
  EXPECT_DOUBLE_EQ(r.total_ratio, 500.0 / 896.0);
  EXPECT_DOUBLE_EQ(r.byte_speedup, 896.0 / 500.0);
  EXPECT_EQ(r.ideal_speedup, 1.6);
  const auto empty = communication_report(ByteMeter{}, FullPrecisionBaseline{}, 4);
  EXPECT_EQ(empty.downlink_ratio, 0.0);
  EXPECT_EQ(empty.byte_speedup, 0.0);
}

}  // namespace
}  // namespace qesgd
