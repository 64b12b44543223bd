#include "ermu/harness.hpp"
#include "ermu/selftest.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"ermu: empirical risk minimization universality experiments"};
  app.require_subcommand(1);

  ermu::RunOptions run;
  std::string out_dir;
  int threads = 0;
  std::uint64_t seed = 0;
  auto* run_cmd = app.add_subcommand("run", "run the campaign described by a config file");
  run_cmd->add_option("--config", run.config_path, "YAML configuration")->required();
  auto* run_out = run_cmd->add_option("--out", out_dir, "output directory (overrides output_dir)");
  auto* run_threads = run_cmd->add_option("--threads", threads, "worker threads (else ERMU_THREADS, else config)");
  auto* run_seed = run_cmd->add_option("--seed-override", seed, "replace master_seed");

  std::string results_dir;
  std::string report_out;
  auto* report_cmd = app.add_subcommand("report", "summarize a results directory");
  report_cmd->add_option("results", results_dir, "directory written by `ermu run`")->required();
  auto* rep_out = report_cmd->add_option("--out", report_out, "where to write the report (default: results dir)");

  int st_threads = 0;
  auto* selftest_cmd = app.add_subcommand("selftest", "run the built-in property checks");
  auto* st_thr = selftest_cmd->add_option("--threads", st_threads, "worker threads");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      if (*run_out) run.out_dir = out_dir;
      if (*run_threads) run.threads = threads;
      if (*run_seed) run.seed_override = seed;
      return ermu::cli_run(run, std::cout, std::cerr);
    }
    if (*report_cmd) {
      std::optional<std::filesystem::path> dest;
      if (*rep_out) dest = report_out;
      return ermu::cli_report(results_dir, dest, std::cout, std::cerr);
    }
    if (*selftest_cmd) {
      const int t = ermu::resolve_threads(*st_thr ? std::optional<int>(st_threads) : std::nullopt, 1);
      return ermu::cli_selftest(t, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
