#include "qesgd/ps_sim.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "qesgd/codec.hpp"
#include "qesgd/quant.hpp"

namespace qesgd {
namespace {

std::span<double> view(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace

ServerState::ServerState(const ProblemSpec& spec, ScheduleParams schedule, std::size_t workers,
                         std::size_t global_batch, std::uint64_t seed,
                         std::optional<std::size_t> bucket_size, Averaging averaging,
                         const Vector& w0)
    : spec_(&spec),
      schedule_(schedule),
      workers_(workers),
      global_batch_(global_batch),
      bucket_size_(bucket_size),
      averaging_(averaging),
      quant_rng_(seed, kQuantStream),
      w_(initial_point(spec, w0)) {
  schedule_.validate();
  if (workers_ < 1 || workers_ >= kServerSender) throw std::invalid_argument("workers must be in [1, 65534]");
  if (global_batch_ < 1) throw std::invalid_argument("global batch size must be >= 1");
  if (bucket_size_ && *bucket_size_ < 1) throw std::invalid_argument("bucket_size must be >= 1");
  const auto d = w_.size();
  z_ = Vector::Zero(d);
  z_hat_ = Vector::Zero(d);
  z_sum_ = Vector::Zero(d);
  total_ = Vector::Zero(d);
}

const EpochPlan& ServerState::begin_epoch(std::int64_t t) {
  if (t != epoch_ + 1) throw ProtocolError("epochs must start in order");
  if (epoch_ >= 0 && rounds_in_epoch_ != -1) throw ProtocolError("previous epoch was not closed");
  epoch_ = t;
  plan_ = plan_epoch(*spec_, schedule_, t, w_);
  z_.setZero();
  z_sum_.setZero();
  rounds_in_epoch_ = 0;
  return plan_;
}

BroadcastZ ServerState::server_round(std::span<const PushGradient> pushes) {
  if (epoch_ < 0 || rounds_in_epoch_ < 0) throw ProtocolError("server_round outside an epoch");
  if (rounds_in_epoch_ >= plan_.K) throw ProtocolError("epoch already ran K_t rounds");
  if (pushes.size() != workers_) {
    throw ProtocolError("expected " + std::to_string(workers_) + " pushes, got " +
                        std::to_string(pushes.size()));
  }
  std::vector<const PushGradient*> by_worker(workers_, nullptr);
  for (const auto& p : pushes) {
    if (p.worker_id >= workers_) throw ProtocolError("push from unknown worker " + std::to_string(p.worker_id));
    if (by_worker[p.worker_id]) throw ProtocolError("duplicate push from worker " + std::to_string(p.worker_id));
    if (p.round != round_) {
      throw ProtocolError("push for round " + std::to_string(p.round) + " during round " +
                          std::to_string(round_));
    }
    if (p.g.size() != w_.size()) throw ProtocolError("push has wrong dimension");
    by_worker[p.worker_id] = &p;
  }

  total_.setZero();
  for (const auto* p : by_worker) total_ += p->g;

  if (averaging_ == Averaging::kAsWritten) z_sum_ += z_;
  z_hat_ = z_ - (plan_.eta / static_cast<double>(global_batch_)) * total_;

  std::vector<QuantizedVector> frames;
  if (bucket_size_) {
    const double cap = plan_.delta;
    frames = quantize_bucketed(view(z_hat_), *bucket_size_, plan_.bits, quant_rng_,
                               [cap](std::span<const double> b, int bits) {
                                 return std::min(max_abs_delta(b, bits), cap);
                               });
  } else {
    frames.push_back(quantize_vector(view(z_hat_), QuantGrid(plan_.delta, plan_.bits), quant_rng_));
  }
  std::size_t offset = 0;
  for (const auto& f : frames) {
    f.decode_into(view(z_).subspan(offset, f.dim()));
    offset += f.dim();
  }
  if (averaging_ == Averaging::kSkipAnchor) z_sum_ += z_;

  BroadcastZ msg{round_, encode_frames(frames)};
  ++round_;
  ++rounds_in_epoch_;
  return msg;
}

BroadcastEpochAnchor ServerState::end_epoch() {
  if (epoch_ < 0 || rounds_in_epoch_ != plan_.K) {
    throw ProtocolError("end_epoch before K_t rounds completed");
  }
  w_ = w_ + z_sum_ / static_cast<double>(plan_.K);
  rounds_in_epoch_ = -1;
  return {static_cast<std::uint64_t>(epoch_ + 1), w_};
}

WorkerState::WorkerState(std::uint32_t id, const ProblemSpec& spec, const Vector& w0)
    : id_(id), spec_(&spec), w_(initial_point(spec, w0)) {
  z_ = Vector::Zero(w_.size());
  u_ = Vector::Zero(w_.size());
}

PushGradient WorkerState::compute(std::span<const std::size_t> batch) {
  if (awaiting_broadcast_) {
    throw ProtocolError("worker " + std::to_string(id_) + " has not received round " +
                        std::to_string(next_round_ - 1) + " broadcast");
  }
  u_ = w_ + z_;
  PushGradient push{id_, next_round_, Vector::Zero(w_.size())};
  for (const std::size_t i : batch) {
    if (i >= spec_->n()) throw std::out_of_range("worker batch index out of range");
    accumulate_sample_gradient(*spec_, i, u_, push.g);
  }
  ++next_round_;
  awaiting_broadcast_ = true;
  return push;
}

void WorkerState::receive(const BroadcastZ& msg) {
  if (!awaiting_broadcast_ || msg.round + 1 != next_round_) {
    throw ProtocolError("worker " + std::to_string(id_) + " got broadcast for round " +
                        std::to_string(msg.round) + " out of order");
  }
  const auto frames = decode_frames(msg.frames);
  std::size_t offset = 0;
  for (const auto& f : frames) {
    if (offset + f.dim() > static_cast<std::size_t>(z_.size())) {
      throw ProtocolError("broadcast z has wrong dimension");
    }
    f.decode_into(view(z_).subspan(offset, f.dim()));
    offset += f.dim();
  }
  if (offset != static_cast<std::size_t>(z_.size())) throw ProtocolError("broadcast z has wrong dimension");
  awaiting_broadcast_ = false;
}

void WorkerState::receive(const BroadcastEpochAnchor& msg) {
  if (awaiting_broadcast_) throw ProtocolError("epoch anchor arrived before the last round's z");
  if (msg.w.size() != w_.size()) throw ProtocolError("epoch anchor has wrong dimension");
  w_ = msg.w;
  z_.setZero();
}

PushGradient worker_round(WorkerState& state, const BroadcastZ& z_msg,
                          std::span<const std::size_t> batch) {
  state.receive(z_msg);
  return state.compute(batch);
}

DistributedResult run_distributed(const ProblemSpec& spec, const ScheduleParams& s,
                                  const DistributedOptions& opts) {
  if (opts.epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (opts.workers < 1) throw std::invalid_argument("workers must be >= 1");
  if (opts.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");

  const std::size_t p = opts.workers;
  ServerState server(spec, s, p, opts.batch_size, opts.seed, opts.bucket_size, opts.averaging,
                     opts.w0);
  std::vector<WorkerState> workers;
  workers.reserve(p);
  for (std::size_t j = 0; j < p; ++j) {
    workers.emplace_back(static_cast<std::uint32_t>(j), spec, opts.w0);
  }

  RandomSource sampler(opts.seed, kSampleStream);
  std::vector<std::size_t> draws;
  std::vector<std::vector<std::size_t>> local(p);
  std::vector<PushGradient> pushes;
  pushes.reserve(p);
  DistributedResult result;

  auto log = [&](Direction dir, std::uint16_t fanout, std::uint64_t round, const Message& m) {
    const auto size = wire_size(m);
    result.meter.record(dir, round, std::uint64_t{fanout} * size);
    if (opts.keep_log) result.log.push_back({dir, fanout, round, encode_message(m)});
    return std::uint64_t{fanout} * size;
  };
  auto with_bytes = [&](RoundMetrics row) {
    row.uplink_bytes = result.meter.uplink_bytes();
    row.downlink_bytes = result.meter.downlink_bytes();
    return row;
  };
  const auto fanout = static_cast<std::uint16_t>(p);

  for (std::int64_t t = 0;; ++t) {
    const EpochPlan plan = server.begin_epoch(t);
    result.trajectory.append_anchor(with_bytes(anchor_row(spec, t, plan, server.anchor())),
                                    server.anchor());
    if (t == opts.epochs) break;

    for (std::int64_t k = 0; k < plan.K; ++k) {
      draw_batch(sampler, spec.n(), opts.batch_size, draws);
      for (auto& l : local) l.clear();
      for (std::size_t j = 0; j < draws.size(); ++j) local[j % p].push_back(draws[j]);

      // Workers are independent within a round; the server reduces in id order.
      pushes.clear();
      for (std::size_t j = 0; j < p; ++j) {
        pushes.push_back(workers[j].compute(local[j]));
        log(Direction::kUplink, 1, pushes.back().round, pushes.back());
      }
      BroadcastZ bz = server.server_round(pushes);
      result.z_downlink_bytes += log(Direction::kDownlink, fanout, bz.round, bz);
      for (auto& w : workers) w.receive(bz);

      if (opts.emission == Emission::kPerStep) {
        const Vector u = server.anchor() + server.z();
        RoundMetrics row;
        row.t = t;
        row.k = k + 1;
        row.eta = plan.eta;
        row.K = plan.K;
        row.bits = plan.bits;
        row.delta = plan.delta;
        row.suboptimality = suboptimality(spec, u);
        row.grad_norm = full_gradient(spec, u).norm();
        result.trajectory.append(with_bytes(row));
      }
    }

    BroadcastEpochAnchor anchor = server.end_epoch();
    result.anchor_downlink_bytes += log(Direction::kDownlink, fanout, server.next_round() - 1, anchor);
    for (auto& w : workers) w.receive(anchor);
  }
  result.rounds = server.next_round();
  return result;
}

FullPrecisionBaseline full_precision_baseline(std::uint64_t rounds, std::size_t workers,
                                              std::size_t dim) {
  const std::uint64_t per_message = dense_message_size(dim);
  return {rounds * workers * per_message, rounds * workers * per_message};
}

double ideal_speedup(double bits) { return 2.0 / (1.0 + bits / 32.0); }

CommunicationReport communication_report(const ByteMeter& meter,
                                         const FullPrecisionBaseline& baseline, double bits) {
  CommunicationReport r;
  const double base_total =
      static_cast<double>(baseline.uplink_bytes) + static_cast<double>(baseline.downlink_bytes);
  if (baseline.downlink_bytes > 0) {
    r.downlink_ratio = static_cast<double>(meter.downlink_bytes()) /
                       static_cast<double>(baseline.downlink_bytes);
  }
  if (base_total > 0.0) r.total_ratio = static_cast<double>(meter.total_bytes()) / base_total;
  if (meter.total_bytes() > 0) r.byte_speedup = base_total / static_cast<double>(meter.total_bytes());
  r.ideal_speedup = ideal_speedup(bits);
  return r;
}

}  // namespace qesgd
