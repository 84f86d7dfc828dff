#include "qesgd/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "qesgd/codec.hpp"
#include "qesgd/dataset_csv.hpp"
#include "qesgd/format.hpp"
#include "qesgd/optimizers.hpp"
#include "qesgd/ps_sim.hpp"
#include "qesgd/rate_fit.hpp"

namespace qesgd {
namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// Rewrites the byte columns of a trajectory produced without a simulator.
TrajectoryRecord with_modeled_bytes(const TrajectoryRecord& traj, bool per_step_schedule,
                                    std::uint64_t up_per_round, std::uint64_t down_per_round,
                                    std::uint64_t& rounds_out) {
  TrajectoryRecord out;
  std::uint64_t anchor_rounds = 0;
  std::int64_t pending_K = 0;
  std::size_t anchor_index = 0;
  for (const auto& src : traj.rows()) {
    RoundMetrics row = src;
    std::uint64_t rounds = 0;
    if (per_step_schedule) {
      rounds = static_cast<std::uint64_t>(row.t);
    } else if (row.k == 0) {
      anchor_rounds += static_cast<std::uint64_t>(pending_K);
      pending_K = row.K;
      rounds = anchor_rounds;
    } else {
      rounds = anchor_rounds + static_cast<std::uint64_t>(row.k);
    }
    row.uplink_bytes = rounds * up_per_round;
    row.downlink_bytes = rounds * down_per_round;
    rounds_out = rounds;
    if (row.k == 0) {
      out.append_anchor(row, traj.anchors().at(anchor_index++));
    } else {
      out.append(row);
    }
  }
  return out;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

}  // namespace

ProblemSpec build_problem(const ProblemBlock& block) {
  if (!block.data.empty()) {
    return ProblemSpec::create(block.kind, read_dataset_csv(block.data), block.lambda);
  }
  SyntheticOptions opts;
  opts.kind = block.kind;
  opts.n = block.n;
  opts.d = block.d;
  opts.seed = block.seed;
  opts.condition_target = block.condition_target;
  opts.noise = block.noise;
  opts.lambda = block.lambda;
  return gen_synthetic(opts);
}

std::string problem_id(const ProblemBlock& block) {
  std::string id(to_string(block.kind));
  if (!block.data.empty()) {
    return id + "-csv-" + std::filesystem::path(block.data).filename().string() + "-lambda" +
           format_double(block.lambda);
  }
  return id + "-n" + std::to_string(block.n) + "-d" + std::to_string(block.d) + "-cond" +
         format_double(block.condition_target) + "-lambda" + format_double(block.lambda) +
         "-noise" + format_double(block.noise) + "-seed" + std::to_string(block.seed);
}

ScheduleParams build_schedule(const MethodBlock& block, const ProblemSpec& spec) {
  ScheduleParams s;
  s.eta0 = block.eta0;
  s.eta_rule = block.eta_rule;
  s.epoch_rule = block.epoch_rule;
  s.fixed_epoch_length = block.K;
  s.bits_rule = block.bits_rule;
  s.fixed_bits = block.bits;
  s.bits_max = block.bits_max;
  s.delta_rule = block.delta_rule;
  s.c = block.c;
  s.fixed_delta = block.delta;
  s.bind_problem(spec, Vector::Zero(static_cast<Eigen::Index>(spec.d())));
  s.validate();
  return s;
}

CellResult run_cell(const ProblemSpec& spec, const ExperimentConfig& config, MethodKind method,
                    std::uint64_t seed) {
  const ScheduleParams schedule = build_schedule(config.method, spec);
  const auto p = static_cast<std::uint64_t>(config.run.workers);
  const auto dense = static_cast<std::uint64_t>(dense_message_size(spec.d()));
  CellResult cell;

  if (method == MethodKind::kQesgd) {
    DistributedOptions opts;
    opts.epochs = config.run.epochs;
    opts.workers = config.run.workers;
    opts.batch_size = config.run.batch_size;
    opts.seed = seed;
    opts.bucket_size = config.method.bucket_size;
    opts.averaging = config.method.averaging;
    opts.emission = config.output.emission;
    opts.keep_log = config.output.trace;
    auto res = run_distributed(spec, schedule, opts);
    cell.trajectory = std::move(res.trajectory);
    cell.trace = std::move(res.log);
    cell.rounds = res.rounds;
    return cell;
  }

  if (method == MethodKind::kEpochSgd) {
    EpochRunOptions opts;
    opts.epochs = config.run.epochs;
    opts.batch_size = config.run.batch_size;
    opts.seed = seed;
    opts.averaging = config.method.averaging;
    opts.emission = config.output.emission;
    cell.trajectory = with_modeled_bytes(run_epoch_sgd(spec, schedule, opts), false, p * dense,
                                         p * dense, cell.rounds);
    return cell;
  }

  SgdOptions sgd;
  sgd.batch_size = config.run.batch_size;
  sgd.seed = seed;
  const bool per_step = config.run.total_steps.has_value();
  if (per_step) {
    sgd.schedule = PerStepSchedule{config.method.eta0, config.method.eta_rule,
                                   *config.run.total_steps, config.run.report_every};
  } else {
    sgd.schedule = EpochMatchedSchedule{schedule, config.run.epochs};
  }

  if (method == MethodKind::kSgd) {
    cell.trajectory =
        with_modeled_bytes(run_sgd(spec, sgd), per_step, p * dense, p * dense, cell.rounds);
    return cell;
  }

  QsgdOptions q;
  q.sgd = std::move(sgd);
  q.bits = config.method.bits;
  q.delta = config.method.qsgd_delta;
  const auto up = p * static_cast<std::uint64_t>(encoded_size(spec.d(), q.bits));
  cell.trajectory = with_modeled_bytes(run_qsgd(spec, q), per_step, up, p * dense, cell.rounds);
  return cell;
}

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::optional<std::filesystem::path>& out_dir) {
  const ProblemSpec spec = build_problem(config.problem);
  const std::string pid = problem_id(config.problem);
  ExperimentResult result;
  if (out_dir) std::filesystem::create_directories(*out_dir);

  for (const MethodKind method : config.method.names) {
    const std::string name(to_string(method));
    std::vector<CellResult> cells;
    for (const auto seed : config.run.seeds) {
      cells.push_back(run_cell(spec, config, method, seed));
      if (!out_dir) continue;
      const auto stem = name + "_seed" + std::to_string(seed);
      const auto csv = *out_dir / (stem + ".csv");
      write_trajectory_csv(csv, cells.back().trajectory);
      result.files.push_back(csv);
      if (config.output.trace && method == MethodKind::kQesgd) {
        const auto trace = *out_dir / (stem + ".trace");
        std::ofstream os(trace, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write " + trace.string());
        write_trace(os, cells.back().trace);
        if (!os) throw std::runtime_error("failed writing " + trace.string());
        result.files.push_back(trace);
      }
    }

    MethodResult mr;
    const auto& first = cells.front().trajectory.rows();
    for (std::size_t i = 0; i < first.size(); ++i) {
      std::vector<double> vals;
      for (const auto& c : cells) vals.push_back(c.trajectory.rows().at(i).suboptimality);
      RoundMetrics row = first[i];
      row.suboptimality = median(std::move(vals));
      mr.median_rows.push_back(row);
    }

    auto& s = mr.summary;
    s.method = name;
    s.problem_id = pid;
    s.seeds = cells.size();
    const bool full_precision = method == MethodKind::kSgd || method == MethodKind::kEpochSgd;
    s.bits = full_precision ? 32 : first.back().bits;
    s.initial_suboptimality = mr.median_rows.front().suboptimality;
    s.final_suboptimality = mr.median_rows.back().suboptimality;
    s.slope = std::numeric_limits<double>::quiet_NaN();
    s.r2 = std::numeric_limits<double>::quiet_NaN();
    try {
      const auto fit =
          fit_convergence_slope(mr.median_rows, config.output.fit_lo, config.output.fit_hi);
      s.slope = fit.slope;
      s.r2 = fit.r2;
    } catch (const std::invalid_argument&) {
    }
    s.uplink_bytes = first.back().uplink_bytes;
    s.downlink_bytes = first.back().downlink_bytes;
    s.rounds = cells.front().rounds;
    result.methods.push_back(std::move(mr));
  }

  if (out_dir) {
    std::vector<MethodSummary> rows;
    for (const auto& m : result.methods) rows.push_back(m.summary);
    const auto path = *out_dir / "summary.csv";
    write_summary_csv(path, rows);
    result.files.push_back(path);
  }
  return result;
}

void write_summary_csv(std::ostream& os, const std::vector<MethodSummary>& rows) {
  os << kSummaryCsvHeader << '\n';
  for (const auto& r : rows) {
    os << csv_escape(r.method) << ',' << csv_escape(r.problem_id) << ',' << r.seeds << ','
       << r.bits << ',' << format_double(r.initial_suboptimality) << ','
       << format_double(r.final_suboptimality) << ',' << format_double(r.slope) << ','
       << format_double(r.r2) << ',' << r.uplink_bytes << ',' << r.downlink_bytes << ','
       << r.rounds << '\n';
  }
}

void write_summary_csv(const std::filesystem::path& path, const std::vector<MethodSummary>& rows) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  write_summary_csv(os, rows);
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

std::vector<MethodSummary> read_summary_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || trim(line) != kSummaryCsvHeader) {
    throw std::runtime_error("summary CSV header mismatch");
  }
  std::vector<MethodSummary> out;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_csv_line(trim(line));
    auto bad = [&] {
      return std::runtime_error("summary CSV line " + std::to_string(line_no) + " is malformed");
    };
    if (f.size() != 11) throw bad();
    MethodSummary s;
    s.method = f[0];
    s.problem_id = f[1];
    auto real = [&](const std::string& v, double& x) {
      if (v == "nan" || v == "-nan") {
        x = std::numeric_limits<double>::quiet_NaN();
        return true;
      }
      return parse_double(v, x);
    };
    if (!parse_int(f[2], s.seeds) || !parse_int(f[3], s.bits) ||
        !real(f[4], s.initial_suboptimality) || !real(f[5], s.final_suboptimality) ||
        !real(f[6], s.slope) || !real(f[7], s.r2) || !parse_int(f[8], s.uplink_bytes) ||
        !parse_int(f[9], s.downlink_bytes) || !parse_int(f[10], s.rounds)) {
      throw bad();
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<MethodSummary> read_summary_csv(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return read_summary_csv(is);
}

}  // namespace qesgd
