#pragma once

#include "ermu/universality.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ermu {

inline constexpr std::string_view kTrialCsvHeader =
    "family,n,p,trial,seed,train_opt,test_x,test_x_se,test_g,test_g_se,iters,flags";

/// 17 significant digits, '.' decimal point, no grouping.
std::string format_double(double v);

/// RFC-4180 field quoting.
std::string csv_field(std::string_view s);
std::vector<std::string> split_csv_line(std::string_view line);

/// One row per arm; the family column carries "<id>:x" or "<id>:g".
std::string trials_to_csv(std::span<const TrialResult> trials);

struct CsvDiagnostics {
  std::vector<std::string> messages;
  bool ok() const { return messages.empty(); }
};

/// Parses a trial CSV, pairing the two arms of each trial. Malformed rows and
/// unpaired arms are reported with file:line diagnostics and skipped.
std::vector<TrialResult> parse_trials_csv(std::string_view text, const std::string& source,
                                          CsvDiagnostics& diag);

/// Writes through a temporary sibling and renames, so the target either holds
/// the complete content or does not exist.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace ermu
