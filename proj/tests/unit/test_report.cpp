#include "ermu/report.hpp"

#include "ermu/rng.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cmath>

using namespace ermu;

namespace {
TrialResult make_trial(const std::string& fam, Index n, int trial, double tx, double tg, std::uint64_t seed) {
  TrialResult t;
  t.family = fam;
  t.n = n;
  t.p = n / 2;
  t.trial = trial;
  t.seed = seed;
  t.x_arm.train_opt = tx;
  t.g_arm.train_opt = tg;
  t.x_arm.test_x = {tx + 0.1, 0.01};
  t.x_arm.test_g = {tx + 0.1, 0.01};
  t.g_arm.test_x = {tg + 0.1, 0.01};
  t.g_arm.test_g = {tg + 0.1, 0.01};
  return t;
}

std::vector<TrialResult> synthetic(const std::string& fam, double shift, std::uint64_t seed) {
  std::vector<TrialResult> out;
  for (Index n : {100, 200, 400}) {
    const Vector a = standard_normal(30, derive_seed(seed, {static_cast<std::uint64_t>(n), 0}));
    const Vector b = standard_normal(30, derive_seed(seed, {static_cast<std::uint64_t>(n), 1}));
    for (int i = 0; i < 30; ++i) out.push_back(make_trial(fam, n, i, 1.0 + shift + 0.1 * a(i), 1.0 + 0.1 * b(i), i));
  }
  return out;
}

ReportOptions fast() {
  ReportOptions o;
  o.resamples = 300;
  o.ks_null_reps = 500;
  return o;
}
}  // namespace

TEST_CASE("one trial gives degenerate intervals") {
  const std::vector<TrialResult> t = {make_trial("a", 100, 0, 1.0, 0.9, 1)};
  const auto r = build_report(t, fast());
  REQUIRE(r.families.size() == 1);
  const SizeReport& s = r.families[0].sizes[0];
  CHECK(s.degenerate);
  CHECK(s.train_gap.ci.width() == 0.0);
  CHECK(s.train_gap.estimate == doctest::Approx(0.1));
}

TEST_CASE("swapping arms negates the signed gap exactly") {
  auto t = synthetic("a", 0.05, 3);
  auto swapped = t;
  for (auto& r : swapped) std::swap(r.x_arm, r.g_arm);
  const auto a = build_report(t, fast());
  const auto b = build_report(swapped, fast());
  for (std::size_t i = 0; i < a.families[0].sizes.size(); ++i) {
    CHECK(a.families[0].sizes[i].train_gap.estimate == -b.families[0].sizes[i].train_gap.estimate);
    CHECK(a.families[0].sizes[i].ks == b.families[0].sizes[i].ks);
  }
}

TEST_CASE("gap trend rule") {
  int inv = 0;
  CHECK(gap_trend_non_increasing(std::vector<double>{0.3, 0.2, 0.1}, std::vector<double>{0.01, 0.01, 0.01}, &inv));
  CHECK(inv == 0);
  CHECK(gap_trend_non_increasing(std::vector<double>{0.3, 0.31, 0.1}, std::vector<double>{0.05, 0.05, 0.05}, &inv));
  CHECK(inv == 1);
  CHECK_FALSE(gap_trend_non_increasing(std::vector<double>{0.3, 0.5, 0.1}, std::vector<double>{0.05, 0.05, 0.05}));
  CHECK_FALSE(gap_trend_non_increasing(std::vector<double>{0.1, 0.11, 0.12}, std::vector<double>{0.05, 0.05, 0.05}));
  CHECK(gap_trend_non_increasing(std::vector<double>{0.1}, std::vector<double>{0.0}));
}

TEST_CASE("families are reported in id order with control verdicts") {
  auto t = synthetic("zeta", 0.0, 1);
  const auto beta = synthetic("alpha", 0.5, 2);
  t.insert(t.end(), beta.begin(), beta.end());
  auto opts = fast();
  opts.control_families = {"zeta", "alpha"};
  const auto r = build_report(t, opts);
  REQUIRE(r.families.size() == 2);
  CHECK(r.families[0].id == "alpha");
  CHECK(r.families[1].id == "zeta");
  CHECK(r.families[0].verdict == "FAIL");
  CHECK(r.families[1].verdict == "PASS");
  CHECK(r.find("zeta") == &r.families[1]);
  CHECK(r.find("none") == nullptr);
  for (const auto& f : r.families)
    for (std::size_t i = 1; i < f.sizes.size(); ++i) CHECK(f.sizes[i].n > f.sizes[i - 1].n);

  const auto j = nlohmann::json::parse(r.to_json());
  CHECK(j["families"].size() == 2);
  CHECK(j["families"][0]["id"] == "alpha");
}

TEST_CASE("quarantined arms are excluded and counted") {
  auto t = synthetic("a", 0.0, 4);
  t[0].x_arm.flags = kFlagDiverged;
  t[0].x_arm.train_opt = std::nan("");
  const auto r = build_report(t, fast());
  CHECK(r.families[0].sizes[0].quarantined == 1);
  CHECK(r.families[0].sizes[0].trials == 29);
  CHECK(std::isfinite(r.families[0].sizes[0].train_gap.estimate));
}

TEST_CASE("test gap SE combines the arms") {
  const auto t = synthetic("a", 0.0, 5);
  const auto r = build_report(t, fast());
  const SizeReport& s = r.families[0].sizes[0];
  std::vector<double> rx, rg;
  for (const auto& tr : t)
    if (tr.n == 100) {
      rx.push_back(tr.x_arm.test_x.value);
      rg.push_back(tr.g_arm.test_g.value);
    }
  const double se = std::hypot(sample_sd(rx), sample_sd(rg)) / std::sqrt(30.0);
  CHECK(s.test_gap_se == doctest::Approx(se).epsilon(1e-12));
}
