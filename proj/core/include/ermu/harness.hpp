#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

namespace ermu {

struct RunOptions {
  std::filesystem::path config_path;
  std::optional<std::filesystem::path> out_dir;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed_override;
};

/// --threads, then ERMU_THREADS, then the config value.
int resolve_threads(std::optional<int> flag, int config_value);

/// Runs the campaign and the enabled diagnostics, writing trials.csv,
/// sweep.csv, free_energy_path.csv, near_minimizers.csv, config.yaml and
/// MANIFEST.json into the output directory. Returns a process exit code.
int cli_run(const RunOptions& options, std::ostream& out, std::ostream& err);

/// Reads a results directory and writes report.json, gap_vs_n.csv,
/// free_energy_trace.csv and d_curves.csv (the last two when their inputs exist).
int cli_report(const std::filesystem::path& results_dir,
               const std::optional<std::filesystem::path>& out_dir, std::ostream& out,
               std::ostream& err);

}  // namespace ermu
