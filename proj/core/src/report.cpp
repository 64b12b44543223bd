#include "ermu/report.hpp"

#include "ermu/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace ermu {

bool gap_trend_non_increasing(std::span<const double> abs_gaps, std::span<const double> ses,
                              int* inversions) {
  if (abs_gaps.size() != ses.size()) throw InvalidArgument("gap and SE sequences differ in length");
  int inv = 0;
  bool ok = true;
  for (std::size_t k = 1; k < abs_gaps.size(); ++k) {
    const double rise = abs_gaps[k] - abs_gaps[k - 1];
    if (rise > 0.0 || std::isnan(rise)) {
      ++inv;
      if (!(rise <= ses[k])) ok = false;
    }
  }
  if (inversions) *inversions = inv;
  return ok && inv <= 1;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double mean_or_nan(const std::vector<double>& v) { return v.empty() ? kNaN : sample_mean(v); }

SizeReport summarize_size(const std::string& id, const std::vector<const TrialResult*>& rows,
                          const ReportOptions& opt, std::map<std::size_t, double>& ks_cache) {
  SizeReport s;
  s.n = rows.front()->n;
  s.p = rows.front()->p;
  std::vector<double> tx, tg, gaps, test_x, test_g, test_gaps;
  for (const TrialResult* r : rows) {
    if (r->x_arm.quarantined() || r->g_arm.quarantined()) {
      ++s.quarantined;
      continue;
    }
    tx.push_back(r->x_arm.train_opt);
    tg.push_back(r->g_arm.train_opt);
    gaps.push_back(r->x_arm.train_opt - r->g_arm.train_opt);
    test_x.push_back(r->x_arm.test_x.value);
    test_g.push_back(r->g_arm.test_g.value);
    test_gaps.push_back(r->x_arm.test_x.value - r->g_arm.test_g.value);
  }
  s.trials = static_cast<int>(gaps.size());
  s.mean_train_x = mean_or_nan(tx);
  s.mean_train_g = mean_or_nan(tg);
  if (gaps.empty()) {
    s.train_gap = {kNaN, kNaN, {kNaN, kNaN}, true};
    s.test_gap = s.train_gap;
    s.ks = kNaN;
    s.ks_null_q99 = kNaN;
    s.test_gap_se = kNaN;
    s.degenerate = true;
    return s;
  }
  const auto tag = [&](const char* what) {
    return derive_seed(opt.seed, {hash_tag(id), static_cast<std::uint64_t>(s.n), hash_tag(what)});
  };
  s.train_gap = bootstrap_mean(gaps, opt.resamples, opt.level, tag("train-gap"));
  s.test_gap = bootstrap_mean(test_gaps, opt.resamples, opt.level, tag("test-gap"));
  s.bl = bl_gap(tx, tg, default_psi_dictionary(tx, tg), opt.resamples, tag("bl-gap"));
  s.ks = ks_statistic(tx, tg);
  auto it = ks_cache.find(tx.size());
  if (it == ks_cache.end())
    it = ks_cache
             .emplace(tx.size(), ks_null_quantile(tx.size(), tg.size(), 0.99, opt.ks_null_reps,
                                                  derive_seed(opt.seed, {hash_tag("ks-null"), tx.size()})))
             .first;
  s.ks_null_q99 = it->second;
  const double root_t = std::sqrt(static_cast<double>(s.trials));
  const double se_x = sample_sd(test_x) / root_t, se_g = sample_sd(test_g) / root_t;
  s.test_gap_se = std::sqrt(se_x * se_x + se_g * se_g);
  s.degenerate = s.train_gap.degenerate;
  return s;
}

TrendSummary summarize_trend(const std::vector<SizeReport>& sizes) {
  TrendSummary t;
  if (sizes.empty()) return t;
  std::vector<double> abs_gaps, ses;
  for (const SizeReport& s : sizes) {
    abs_gaps.push_back(std::abs(s.train_gap.estimate));
    ses.push_back(s.train_gap.se);
  }
  t.non_increasing = gap_trend_non_increasing(abs_gaps, ses, &t.inversions);
  const SizeReport& last = sizes.back();
  t.ci_covers_zero_at_largest = last.train_gap.ci.contains(0.0);
  t.gap_within_3se_at_largest = std::abs(last.train_gap.estimate) <= 3.0 * last.train_gap.se;
  t.ks_below_null_at_largest = last.ks < last.ks_null_q99;
  t.test_gap_within_3se_at_largest = std::abs(last.test_gap.estimate) <= 3.0 * last.test_gap_se;
  t.universality_holds = t.non_increasing && t.ci_covers_zero_at_largest;
  return t;
}

nlohmann::json interval_json(const BootstrapResult& b) {
  return {{"estimate", b.estimate}, {"se", b.se}, {"ci", {b.ci.lo, b.ci.hi}}, {"degenerate", b.degenerate}};
}

}  // namespace

UniversalityReport build_report(std::span<const TrialResult> trials, const ReportOptions& options) {
  std::map<std::string, std::map<Index, std::vector<const TrialResult*>>> grouped;
  for (const TrialResult& r : trials) grouped[r.family][r.n].push_back(&r);

  UniversalityReport rep;
  std::map<std::size_t, double> ks_cache;
  for (auto& [id, by_n] : grouped) {
    FamilyReport f;
    f.id = id;
    f.control = options.control_families.contains(id);
    f.non_lipschitz_loss = options.non_lipschitz_families.contains(id);
    for (auto& [n, rows] : by_n) {
      std::sort(rows.begin(), rows.end(),
                [](const TrialResult* a, const TrialResult* b) { return a->trial < b->trial; });
      for (const TrialResult* r : rows)
        if ((r->x_arm.flags | r->g_arm.flags) & kFlagNonLipschitz) f.non_lipschitz_loss = true;
      f.sizes.push_back(summarize_size(id, rows, options, ks_cache));
    }
    f.trend = summarize_trend(f.sizes);
    if (f.control) f.verdict = f.trend.ci_covers_zero_at_largest ? "PASS" : "FAIL";
    rep.families.push_back(std::move(f));
  }
  return rep;
}

const FamilyReport* UniversalityReport::find(const std::string& id) const {
  for (const FamilyReport& f : families)
    if (f.id == id) return &f;
  return nullptr;
}

std::string UniversalityReport::to_json() const {
  nlohmann::json fams = nlohmann::json::array();
  for (const FamilyReport& f : families) {
    nlohmann::json sizes = nlohmann::json::array();
    for (const SizeReport& s : f.sizes) {
      sizes.push_back({
          {"n", s.n},
          {"p", s.p},
          {"trials", s.trials},
          {"quarantined", s.quarantined},
          {"mean_train_x", s.mean_train_x},
          {"mean_train_g", s.mean_train_g},
          {"train_gap", interval_json(s.train_gap)},
          {"bl_gap",
           {{"max", s.bl.max_gap},
            {"argmax", s.bl.argmax},
            {"gaps", s.bl.gaps},
            {"bootstrap", interval_json(s.bl.max_gap_bootstrap)}}},
          {"ks", s.ks},
          {"ks_null_q99", s.ks_null_q99},
          {"test_gap", interval_json(s.test_gap)},
          {"test_gap_combined_se", s.test_gap_se},
          {"degenerate", s.degenerate},
      });
    }
    const TrendSummary& t = f.trend;
    nlohmann::json fam = {
        {"id", f.id},
        {"control", f.control},
        {"non_lipschitz_loss", f.non_lipschitz_loss},
        {"sizes", sizes},
        {"trend",
         {{"non_increasing", t.non_increasing},
          {"inversions", t.inversions},
          {"ci_covers_zero_at_largest", t.ci_covers_zero_at_largest},
          {"gap_within_3se_at_largest", t.gap_within_3se_at_largest},
          {"ks_below_null_at_largest", t.ks_below_null_at_largest},
          {"test_gap_within_3se_at_largest", t.test_gap_within_3se_at_largest},
          {"universality_holds", t.universality_holds}}},
    };
    if (!f.verdict.empty()) fam["verdict"] = f.verdict;
    fams.push_back(std::move(fam));
  }
  return nlohmann::json{{"families", fams}}.dump(2) + "\n";
}

}  // namespace ermu
