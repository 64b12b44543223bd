#pragma once

#include "ermu/stats.hpp"
#include "ermu/universality.hpp"

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace ermu {

struct ReportOptions {
  int resamples = 2000;
  double level = 0.95;
  std::uint64_t seed = 0x5eedULL;
  int ks_null_reps = 20000;
  std::set<std::string> control_families;
  std::set<std::string> non_lipschitz_families;
};

struct SizeReport {
  Index n = 0;
  Index p = 0;
  int trials = 0;       ///< usable (non-quarantined) trials
  int quarantined = 0;
  double mean_train_x = 0.0;
  double mean_train_g = 0.0;
  BootstrapResult train_gap;  ///< mean of R*_n(X) - R*_n(G)
  BlGapResult bl;
  double ks = 0.0;
  double ks_null_q99 = 1.0;
  BootstrapResult test_gap;   ///< mean of R^x(Theta^X) - R^g(Theta^G)
  /// sqrt(se_x^2 + se_g^2), se_arm = sd over trials of that arm / sqrt(T)
  double test_gap_se = 0.0;
  bool degenerate = false;
};

/// Finite-n reading of train-error universality: the 95% CI of the mean gap
/// covers zero at the largest size and |mean gap| does not grow along the
/// ladder, with at most one increase no larger than one SE.
struct TrendSummary {
  bool non_increasing = false;
  int inversions = 0;
  bool ci_covers_zero_at_largest = false;
  bool gap_within_3se_at_largest = false;
  bool ks_below_null_at_largest = false;
  bool test_gap_within_3se_at_largest = false;
  bool universality_holds = false;
};

struct FamilyReport {
  std::string id;
  bool control = false;
  bool non_lipschitz_loss = false;
  std::vector<SizeReport> sizes;  ///< ascending n
  TrendSummary trend;
  std::string verdict;  ///< PASS/FAIL for control families, empty otherwise
};

struct UniversalityReport {
  std::vector<FamilyReport> families;  ///< ordered by id

  std::string to_json() const;
  const FamilyReport* find(const std::string& id) const;
};

/// |gap_k| sequence non-increasing, allowing one increase bounded by ses[k].
bool gap_trend_non_increasing(std::span<const double> abs_gaps, std::span<const double> ses,
                              int* inversions = nullptr);

UniversalityReport build_report(std::span<const TrialResult> trials, const ReportOptions& options);

}  // namespace ermu
