#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qesgd/messages.hpp"
#include "qesgd/optimizers.hpp"
#include "qesgd/problems.hpp"
#include "qesgd/random_source.hpp"
#include "qesgd/schedule.hpp"
#include "qesgd/trajectory.hpp"

namespace qesgd {

// Server side of synchronous distributed QESGD. Holds the anchor w_t, the
// quantized displacement z and the running sum used for the next anchor.
class ServerState {
 public:
  ServerState(const ProblemSpec& spec, ScheduleParams schedule, std::size_t workers,
              std::size_t global_batch, std::uint64_t seed,
              std::optional<std::size_t> bucket_size = std::nullopt,
              Averaging averaging = Averaging::kAsWritten, const Vector& w0 = Vector());

  // Resets z to 0 and fixes eta_t, K_t, b_t, delta_t from the current anchor.
  const EpochPlan& begin_epoch(std::int64_t t);

  // Expects exactly one push per worker for the current round. Sums them in
  // ascending worker id, applies z <- Q(z - eta/B * sum), and returns the
  // encoded z. Throws ProtocolError on missing, duplicate or stale pushes.
  BroadcastZ server_round(std::span<const PushGradient> pushes);

  // w_{t+1} = w_t + (1/K_t) sum_k z_{t,k}. Throws ProtocolError if fewer
  // than K_t rounds ran.
  BroadcastEpochAnchor end_epoch();

  const Vector& anchor() const { return w_; }
  const Vector& z() const { return z_; }
  const EpochPlan& plan() const { return plan_; }
  std::uint64_t next_round() const { return round_; }
  std::int64_t epoch() const { return epoch_; }

 private:
  const ProblemSpec* spec_;
  ScheduleParams schedule_;
  std::size_t workers_;
  std::size_t global_batch_;
  std::optional<std::size_t> bucket_size_;
  Averaging averaging_;
  RandomSource quant_rng_;
  Vector w_, z_, z_hat_, z_sum_, total_;
  EpochPlan plan_;
  std::int64_t epoch_ = -1;
  std::int64_t rounds_in_epoch_ = 0;
  std::uint64_t round_ = 0;
};

class WorkerState {
 public:
  WorkerState(std::uint32_t id, const ProblemSpec& spec, const Vector& w0 = Vector());

  // Un-averaged gradient sum at w_t + z over the batch (zero when empty).
  // Throws ProtocolError if the previous round's broadcast has not arrived.
  PushGradient compute(std::span<const std::size_t> batch);

  // Decodes z; the round must match this worker's last push.
  void receive(const BroadcastZ& msg);
  // Installs w_{t+1} and resets z to 0.
  void receive(const BroadcastEpochAnchor& msg);

  std::uint32_t id() const { return id_; }
  const Vector& anchor() const { return w_; }
  const Vector& z() const { return z_; }

 private:
  std::uint32_t id_;
  const ProblemSpec* spec_;
  Vector w_, z_, u_;
  std::uint64_t next_round_ = 0;
  bool awaiting_broadcast_ = false;
};

// Applies a broadcast then computes this worker's next push.
PushGradient worker_round(WorkerState& state, const BroadcastZ& z_msg,
                          std::span<const std::size_t> batch);

struct DistributedOptions {
  std::int64_t epochs = 0;
  std::size_t workers = 1;     // p
  std::size_t batch_size = 1;  // global B per round
  std::uint64_t seed = 1;
  std::optional<std::size_t> bucket_size;
  Averaging averaging = Averaging::kAsWritten;
  Emission emission = Emission::kPerEpoch;
  bool keep_log = false;
  Vector w0;
};

struct DistributedResult {
  TrajectoryRecord trajectory;
  ByteMeter meter;
  std::vector<LogEntry> log;  // empty unless keep_log
  std::uint64_t rounds = 0;
  // Downlink split by message kind (already multiplied by p).
  std::uint64_t z_downlink_bytes = 0;
  std::uint64_t anchor_downlink_bytes = 0;
};

// Runs T epochs of K_t synchronous rounds. Each round draws B sample ids from
// one global stream; draw j goes to worker j mod p, so the global batch does
// not depend on p. Broadcasts are metered once per receiving worker.
DistributedResult run_distributed(const ProblemSpec& spec, const ScheduleParams& s,
                                  const DistributedOptions& opts);

// Bytes the same number of rounds would cost with full-precision pushes and
// full-precision parameter broadcasts.
struct FullPrecisionBaseline {
  std::uint64_t uplink_bytes = 0;
  std::uint64_t downlink_bytes = 0;
};
FullPrecisionBaseline full_precision_baseline(std::uint64_t rounds, std::size_t workers,
                                              std::size_t dim);

struct CommunicationReport {
  double downlink_ratio = 0.0;  // measured downlink / baseline downlink
  double total_ratio = 0.0;     // measured total / baseline total
  double byte_speedup = 0.0;    // baseline total / measured total
  double ideal_speedup = 0.0;   // 2 / (1 + b/32)
};

// Communication-bound speedup when uplink stays at 32 bits and downlink uses b.
double ideal_speedup(double bits);

CommunicationReport communication_report(const ByteMeter& meter,
                                         const FullPrecisionBaseline& baseline, double bits);

}  // namespace qesgd
