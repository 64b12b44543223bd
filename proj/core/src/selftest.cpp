#include "ermu/selftest.hpp"

#include "ermu/config.hpp"
#include "ermu/csv.hpp"
#include "ermu/free_energy.hpp"
#include "ermu/quadrature.hpp"
#include "ermu/report.hpp"
#include "ermu/rng.hpp"
#include "ermu/universality.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <functional>
#include <ostream>

namespace ermu {

namespace {

struct Check {
  bool ok;
  std::string detail;
};

Check activation_moments() {
  const auto rule = gauss_hermite(100);
  const double e1 = gaussian_expectation([](double t) { return std::tanh(t); }, rule);
  const double e2 = gaussian_expectation([](double t) { return std::cos(t) - std::exp(-0.5); }, rule);
  const double e3 = gaussian_expectation([](double t) { return t * (std::cos(t) - std::exp(-0.5)); }, rule);
  const double worst = std::max({std::abs(e1), std::abs(e2), std::abs(e3)});
  return {worst <= 1e-10, fmt::format("max |moment| = {:.3g}", worst)};
}

Check hermite_covariance() {
  const std::vector<double> c = {0.0, 0.8, 0.4, 0.3};
  const Matrix W = sample_sphere_weights(8, 8, 11);
  const Matrix herm = rf_covariance_hermite(W, c, 3);
  const Activation act = Activation::custom_hermite(c);
  const auto rule = gauss_hermite(60);
  double worst = 0.0;
  for (Index i = 0; i < 8; ++i)
    for (Index j = 0; j < 8; ++j) {
      const double rho = std::clamp(W.col(i).dot(W.col(j)), -1.0, 1.0);
      const auto f = [&](double t) { return act.value(t); };
      worst = std::max(worst, std::abs(herm(i, j) - bivariate_expectation(f, f, rho, rule)));
    }
  return {worst <= 1e-8, fmt::format("max entry error = {:.3g}", worst)};
}

Check ridge_exactness() {
  const Index n = 200, p = 50;
  const Matrix X = standard_normal(n, p, 21);
  const Vector y = X * standard_normal(p, 22) + standard_normal(n, 23);
  const RidgeSolution cf = solve_ridge_closed_form(X, y, 0.1);
  ErmProblem prob;
  prob.loss = Loss::squared();
  prob.regularizer = Regularizer::ridge(0.1);
  prob.theta_star = Matrix::Zero(p, 1);
  const ErmSolution sol = solve_erm(prob, X, y, SolverConfig{});
  const double rel = std::abs(sol.objective - cf.objective) / std::abs(cf.objective);
  return {rel <= 1e-6, fmt::format("relative objective gap = {:.3g}", rel)};
}

Check free_energy_sandwich() {
  ErmProblem prob;
  prob.theta_star = Matrix::Constant(16, 1, 0.25);
  prob.labeler = Labeler::linear(0.5);
  prob.constraint = ConstraintSet::l2_ball(2.0);
  int bad = 0;
  for (int r = 0; r < 5; ++r) {
    const Matrix X = standard_normal(64, 16, derive_seed(31, {static_cast<std::uint64_t>(r)}));
    const Vector y = generate_labels(prob, X, derive_seed(32, {static_cast<std::uint64_t>(r)}));
    const auto cands = CandidateSet::random_net(prob.constraint, 16, 1, 128, 1.0, 33 + r);
    const std::vector<double> betas = {0.1, 1.0, 10.0, 100.0};
    if (!entropy_sandwich_check(cands, prob, X, y, betas).ok()) ++bad;
  }
  return {bad == 0, fmt::format("{} of 5 instances violated", bad)};
}

Check projections() {
  const ConstraintSet sets[] = {ConstraintSet::l2_ball(1.0), ConstraintSet::linf_ball(2.0),
                                ConstraintSet::nt_operator_ball(1.0, 4, 5)};
  double worst = 0.0;
  for (const auto& s : sets) {
    const Matrix a = 3.0 * standard_normal(20, 1, 41);
    const Matrix pa = s.project(a);
    worst = std::max(worst, (s.project(pa) - pa).norm());
  }
  return {worst <= 1e-12, fmt::format("max idempotence error = {:.3g}", worst)};
}

CampaignConfig tiny_campaign(int threads) {
  CampaignConfig c;
  c.master_seed = 7;
  FamilySpec lin;
  lin.id = "lin";
  lin.kind = FamilyKind::LinearIndependent;
  FamilySpec rf;
  rf.id = "rf";
  rf.kind = FamilyKind::RandomFeatures;
  rf.cov_mode = CovarianceMode::HermiteExact;
  c.families = {lin, rf};
  c.ladder = {100, 200};
  c.trials = 3;
  c.n_test = 500;
  c.threads = threads;
  return c;
}

Check campaign_determinism(int threads) {
  const auto a = run_trials(tiny_campaign(1));
  const auto b = run_trials(tiny_campaign(std::max(1, threads)));
  const bool same = trials_to_csv(a) == trials_to_csv(b);
  return {same && a.size() == 12, fmt::format("{} units, identical = {}", a.size(), same)};
}

Check convex_sandwich() {
  ErmProblem prob;
  prob.loss = Loss::squared();
  prob.regularizer = Regularizer::ridge(0.1);
  prob.theta_star = Matrix::Constant(20, 1, 1.0 / std::sqrt(20.0));
  prob.labeler = Labeler::linear(0.5);
  const Matrix X = standard_normal(100, 20, 51);
  const Vector y = generate_labels(prob, X, 52);
  const FeatureSource src = [](Index m, std::uint64_t s) { return standard_normal(m, 20, s); };
  const FrozenTestSet test = make_frozen_test_set(prob, src, 1000, 53);
  const FrozenTestRisk term(prob, test);
  const std::vector<double> grid = {-0.1, -0.01, 0.01, 0.1};
  const auto sw = perturbed_sweep(prob, X, y, term, grid, SolverConfig{});
  const double r = sw.test_at_theta0;
  const bool ok = sw.D[2] <= r && sw.D[3] <= r && sw.D[1] >= r && sw.D[0] >= r;
  return {ok, fmt::format("D(-0.1)={:.6g} D(0.1)={:.6g} R={:.6g}", sw.D[0], sw.D[3], r)};
}

Check config_round_trip() {
  ExperimentConfig cfg;
  cfg.campaign = tiny_campaign(1);
  cfg.free_energy.enabled = true;
  const std::string text = serialize_config(cfg);
  const ExperimentConfig back = parse_config(text);
  const bool ok = serialize_config(back) == text && config_hash(back) == config_hash(cfg);
  return {ok, ok ? "lossless" : "serialization changed on round trip"};
}

Check report_symmetry() {
  auto trials = run_trials(tiny_campaign(1));
  const auto fwd = build_report(trials, ReportOptions{});
  for (auto& t : trials) std::swap(t.x_arm, t.g_arm);
  const auto rev = build_report(trials, ReportOptions{});
  double worst = 0.0;
  for (std::size_t f = 0; f < fwd.families.size(); ++f)
    for (std::size_t s = 0; s < fwd.families[f].sizes.size(); ++s)
      worst = std::max(worst, std::abs(fwd.families[f].sizes[s].train_gap.estimate +
                                       rev.families[f].sizes[s].train_gap.estimate));
  return {worst == 0.0, fmt::format("max |gap + swapped gap| = {:.3g}", worst)};
}

}  // namespace

std::vector<SelftestCase> run_selftest(int threads) {
  const std::vector<std::pair<std::string, std::function<Check()>>> cases = {
      {"activation-moments", activation_moments},
      {"hermite-covariance", hermite_covariance},
      {"ridge-exactness", ridge_exactness},
      {"free-energy-sandwich", free_energy_sandwich},
      {"projection-idempotence", projections},
      {"convex-sandwich", convex_sandwich},
      {"config-round-trip", config_round_trip},
      {"campaign-determinism", [threads] { return campaign_determinism(threads); }},
      {"report-symmetry", report_symmetry},
  };
  std::vector<SelftestCase> out;
  for (const auto& [name, fn] : cases) {
    SelftestCase c;
    c.name = name;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const Check r = fn();
      c.passed = r.ok;
      c.detail = r.detail;
    } catch (const std::exception& e) {
      c.passed = false;
      c.detail = std::string("exception: ") + e.what();
    }
    c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(std::move(c));
  }
  return out;
}

int cli_selftest(int threads, std::ostream& out) {
  int failed = 0;
  for (const SelftestCase& c : run_selftest(threads)) {
    out << fmt::format("{} {:<24} {:7.2f} s  {}\n", c.passed ? "PASS" : "FAIL", c.name, c.seconds, c.detail);
    if (!c.passed) ++failed;
  }
  out << (failed ? fmt::format("{} check(s) failed\n", failed) : std::string("all checks passed\n"));
  return failed ? 1 : 0;
}

}  // namespace ermu
