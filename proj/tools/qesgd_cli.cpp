#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qesgd/compare.hpp"
#include "qesgd/config.hpp"
#include "qesgd/experiment.hpp"
#include "qesgd/format.hpp"
#include "qesgd/rate_fit.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kValidationError = 1;
constexpr int kRuntimeError = 2;

int cmd_run(const std::string& config_path, const std::optional<std::string>& out_dir,
            const std::optional<std::uint64_t>& seed_override) {
  qesgd::ExperimentConfig config;
  try {
    config = qesgd::load_config(config_path);
  } catch (const qesgd::ConfigError& e) {
    std::cerr << config_path << ": " << e.what() << '\n';
    return kValidationError;
  }
  if (seed_override) config.run.seeds = {*seed_override};
  const std::filesystem::path dir = out_dir ? *out_dir : config.output.dir;

  const auto result = qesgd::run_experiment(config, dir);
  for (const auto& m : result.methods) {
    const auto& s = m.summary;
    std::cout << s.method << ": final suboptimality " << qesgd::format_double(s.final_suboptimality)
              << " (initial " << qesgd::format_double(s.initial_suboptimality) << "), slope "
              << qesgd::format_double(s.slope) << ", bytes up " << s.uplink_bytes << " down "
              << s.downlink_bytes << '\n';
  }
  std::cout << "wrote " << result.files.size() << " files to " << dir.string() << '\n';
  return kOk;
}

int cmd_fit(const std::string& csv, const std::vector<std::int64_t>& window) {
  const auto rows = qesgd::read_trajectory_csv(std::filesystem::path(csv));
  qesgd::RateFit fit;
  try {
    fit = qesgd::fit_convergence_slope(rows, window.at(0), window.at(1));
  } catch (const std::invalid_argument& e) {
    std::cerr << "fit: " << e.what() << '\n';
    return kValidationError;
  }
  std::cout << "slope,intercept,t_lo,t_hi,r2\n"
            << qesgd::format_double(fit.slope) << ',' << qesgd::format_double(fit.intercept)
            << ',' << fit.t_lo << ',' << fit.t_hi << ',' << qesgd::format_double(fit.r2) << '\n';
  return kOk;
}

int cmd_compare(const std::vector<std::string>& paths, bool csv) {
  std::vector<qesgd::MethodSummary> all;
  for (const auto& p : paths) {
    auto rows = qesgd::read_summary_csv(std::filesystem::path(p));
    all.insert(all.end(), rows.begin(), rows.end());
  }
  qesgd::ComparisonReport report;
  try {
    report = qesgd::compare_methods(all);
  } catch (const std::invalid_argument& e) {
    std::cerr << "compare: " << e.what() << '\n';
    return kValidationError;
  }
  std::cout << (csv ? qesgd::to_csv(report) : qesgd::to_markdown(report));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantized Epoch-SGD experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed_override;
  auto* run = app.add_subcommand("run", "Run every method and seed in a config");
  run->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("--out-dir", out_dir, "Output directory (overrides [output] dir)");
  run->add_option("--seed-override", seed_override, "Run this single seed instead");

  std::string traj_path;
  std::vector<std::int64_t> window;
  auto* fit = app.add_subcommand("fit", "Fit the log-log slope of a trajectory CSV");
  fit->add_option("trajectory", traj_path, "Trajectory CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--window", window, "t_lo t_hi (t_hi = -1 for the last epoch)")
      ->expected(2)
      ->required();

  std::vector<std::string> summaries;
  bool compare_csv = false;
  auto* compare = app.add_subcommand("compare", "Compare methods from summary CSVs");
  compare->add_option("summaries", summaries, "summary.csv files")
      ->required()
      ->check(CLI::ExistingFile);
  compare->add_flag("--csv", compare_csv, "Print CSV instead of markdown");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidationError;
  }

  try {
    if (*run) return cmd_run(config_path, out_dir, seed_override);
    if (*fit) return cmd_fit(traj_path, window);
    return cmd_compare(summaries, compare_csv);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidationError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
}
