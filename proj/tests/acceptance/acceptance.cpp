// Acceptance suite: one PASS/FAIL line per criterion. Arguments select a
// subset by number; no arguments runs all ten.

#include "ermu/config.hpp"
#include "ermu/csv.hpp"
#include "ermu/free_energy.hpp"
#include "ermu/gaussian_equiv.hpp"
#include "ermu/quadrature.hpp"
#include "ermu/report.hpp"
#include "ermu/rng.hpp"
#include "ermu/solver.hpp"
#include "ermu/universality.hpp"
#include "oracles.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <vector>

using namespace ermu;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Shared between criteria 6, 7 and 10.
struct Campaign {
  CampaignConfig config;
  std::vector<TrialResult> trials;
  UniversalityReport report;
  bool ready = false;
};

Campaign& universality_campaign() {
  static Campaign c;
  if (!c.ready) {
    const auto path = std::filesystem::path(ERMU_SOURCE_DIR) / "configs" / "universality.yaml";
    c.config = load_config(path).campaign;
    c.config.threads = 1;
    c.trials = run_trials(c.config);
    c.report = build_report(c.trials, ReportOptions{});
    c.ready = true;
  }
  return c;
}

Outcome criterion1() {
  const double a = std::abs(oracle::expect([](double t) { return std::tanh(t); }, 100));
  const double b = std::abs(oracle::expect([](double t) { return std::cos(t) - std::exp(-0.5); }, 100));
  const double c = std::abs(oracle::expect([](double t) { return t * (std::cos(t) - std::exp(-0.5)); }, 100));
  // Library quadrature must agree with the independent rule.
  const auto rule = gauss_hermite(100);
  const Activation tanh_act = Activation::tanh_rf();
  const Activation nt_act = Activation::shifted_sine_nt();
  const double la = std::abs(gaussian_expectation([&](double t) { return tanh_act.value(t); }, rule));
  const double lb = std::abs(gaussian_expectation([&](double t) { return nt_act.derivative(t); }, rule));
  const double lc = std::abs(gaussian_expectation([&](double t) { return t * nt_act.derivative(t); }, rule));
  const double worst = std::max({a, b, c, la, lb, lc});
  return {worst <= 1e-10, fmt::format("max |moment| = {:.2e}", worst)};
}

Outcome criterion2() {
  const std::vector<double> coeffs = {0.0, 0.6, 0.2, 0.1};
  const Index p = 32;
  const Matrix W = sample_sphere_weights(p, p, 2024);
  const Matrix herm = rf_covariance_hermite(W, coeffs, 3);
  const FeatureModel model = FeatureModel::random_features(W, Activation::custom_hermite(coeffs));
  const Matrix mc = mc_covariance(model, 100000, 77);
  auto sigma = [&](double t) {
    return coeffs[1] * oracle::hermite_explicit(1, t) + coeffs[2] * oracle::hermite_explicit(2, t) +
           coeffs[3] * oracle::hermite_explicit(3, t);
  };
  double hq = 0.0, hm = 0.0, qm = 0.0;
  for (Index i = 0; i < p; ++i)
    for (Index j = i; j < p; ++j) {
      const double rho = std::clamp(W.col(i).dot(W.col(j)), -1.0, 1.0);
      const double q = i == j ? oracle::expect([&](double t) { return sigma(t) * sigma(t); }, 200)
                              : oracle::tensor_expect(sigma, sigma, rho, 200);
      hq = std::max(hq, std::abs(herm(i, j) - q));
      hm = std::max(hm, std::abs(herm(i, j) - mc(i, j)));
      qm = std::max(qm, std::abs(q - mc(i, j)));
    }
  return {hq <= 1e-3 && hm <= 2e-2 && qm <= 2e-2,
          fmt::format("hermite-quadrature {:.2e}, hermite-MC {:.2e}, quadrature-MC {:.2e}", hq, hm, qm)};
}

Outcome criterion3() {
  const Index n = 200, p = 100;
  const double lambda = 0.1;
  ErmProblem pr;
  pr.loss = Loss::squared();
  pr.regularizer = Regularizer::ridge(lambda);
  pr.theta_star = Matrix::Constant(p, 1, 1.0 / std::sqrt(static_cast<double>(p)));
  pr.labeler = Labeler::linear(0.5);
  const Matrix X = standard_normal(n, p, 301);
  const Vector y = generate_labels(pr, X, 302);
  SolverConfig cfg;
  cfg.tol = 1e-10;
  cfg.max_iters = 50000;
  const ErmSolution sol = solve_erm(pr, X, y, cfg);
  const Vector oracle_theta = oracle::ridge_qr(X, y, lambda);
  const double oracle_obj = (X * oracle_theta - y).squaredNorm() / n + lambda * oracle_theta.squaredNorm();
  const double rel = std::abs(sol.objective - oracle_obj) / oracle_obj;

  double worst_fd = 0.0;
  const Matrix Xs = standard_normal(50, 12, 303);
  for (const Loss& loss : {Loss::logistic(), Loss::huber(0.8), Loss::pseudo_huber(1.2), Loss::squared()})
    for (Index k : {1, 2}) {
      ErmProblem q;
      q.loss = loss;
      q.k = k;
      q.theta_star = standard_normal(12, k, 304) / std::sqrt(12.0);
      q.labeler = Labeler::sign_smooth(0.2, 0.5);
      q.regularizer = Regularizer::ridge(0.05);
      const Vector ys = generate_labels(q, Xs, 305);
      const EmpiricalRisk risk(q, Xs, ys);
      const Matrix theta = standard_normal(12, k, 306) * 0.4;
      Matrix g;
      risk.value_and_gradient(theta, g);
      const Matrix fd = oracle::fd_gradient([&](const Matrix& t) { return risk.value(t); }, theta, 1e-6);
      worst_fd = std::max(worst_fd, (g - fd).norm() / std::max(fd.norm(), 1e-12));
    }
  return {rel <= 1e-6 && worst_fd <= 1e-5,
          fmt::format("objective rel gap {:.2e}, worst gradient rel err {:.2e}", rel, worst_fd)};
}

Outcome criterion4() {
  const std::vector<double> betas = {0.1, 1.0, 10.0, 100.0};
  int bad = 0;
  for (std::uint64_t r = 0; r < 20; ++r) {
    const Index n = 32 + 16 * static_cast<Index>(r % 7);  // up to 128
    const Index p = 8 + static_cast<Index>(r % 5) * 6;
    const std::size_t M = 64 + 32 * (r % 15);  // up to 512
    ErmProblem pr;
    pr.loss = r % 2 ? Loss::huber(1.0) : Loss::logistic();
    pr.labeler = r % 2 ? Labeler::linear(0.5) : Labeler::sign_smooth(0.1, 0.2);
    pr.theta_star = Matrix::Constant(p, 1, 1.0 / std::sqrt(static_cast<double>(p)));
    pr.regularizer = Regularizer::ridge(0.01 * static_cast<double>(r % 3));
    pr.constraint = ConstraintSet::l2_ball(2.0);
    const Matrix X = standard_normal(n, p, derive_seed(400, {r, 0}));
    Vector y = generate_labels(pr, X, derive_seed(400, {r, 1}));
    if (pr.loss.kind() == LossKind::Logistic) y = y.array().sign();
    const auto cands = CandidateSet::random_net(pr.constraint, p, 1, M, 1.0, derive_seed(400, {r, 2}));
    double mn = INFINITY;
    for (const Matrix& c : cands.points) mn = std::min(mn, train_risk(pr, c, X, y));
    double prev = -INFINITY;
    for (double beta : betas) {
      const double f = free_energy(cands, pr, X, y, beta);
      const double lower = mn - std::log(static_cast<double>(M)) / (static_cast<double>(n) * beta);
      if (!(f <= mn && f >= lower && f >= prev)) {
        ++bad;
        break;
      }
      prev = f;
    }
    if (!entropy_sandwich_check(cands, pr, X, y, betas).ok()) ++bad;
  }
  return {bad == 0, fmt::format("{} violations over 20 instances", bad)};
}

Outcome criterion5() {
  FamilySpec ctrl;
  ctrl.id = "control";
  ctrl.kind = FamilyKind::GaussianControl;
  CampaignConfig cfg;
  cfg.families = {ctrl};
  cfg.ladder = {400};
  cfg.trials = 50;
  cfg.n_test = 1000;
  cfg.problem.loss = LossKind::Huber;
  cfg.problem.lambda = 0.1;
  int covered = 0;
  for (std::uint64_t rep = 0; rep < 20; ++rep) {
    cfg.master_seed = derive_seed(500, {rep});
    const auto trials = run_trials(cfg);
    ReportOptions opts;
    opts.seed = derive_seed(501, {rep});
    opts.ks_null_reps = 200;
    const auto rep_report = build_report(trials, opts);
    const SizeReport& s = rep_report.families.at(0).sizes.at(0);
    if (s.p != 300) return {false, fmt::format("control family has p = {}, expected 300", s.p)};
    covered += s.train_gap.ci.contains(0.0);
  }
  return {covered >= 18, fmt::format("CI covers 0 in {} of 20 repetitions", covered)};
}

Outcome criterion6() {
  const Campaign& c = universality_campaign();
  bool ok = c.report.families.size() == 2;
  std::string detail;
  for (const FamilyReport& f : c.report.families) {
    const SizeReport& last = f.sizes.back();
    const bool fam_ok = f.trend.non_increasing && f.trend.gap_within_3se_at_largest && f.trend.ks_below_null_at_largest &&
                        last.n == 800;
    ok = ok && fam_ok;
    std::string gaps;
    for (const SizeReport& s : f.sizes) gaps += fmt::format("{}{:.2e}", gaps.empty() ? "" : "/", std::abs(s.train_gap.estimate));
    detail += fmt::format("{}{}: |gap| {} (inversions {}), n=800 SE {:.2e}, KS {:.3f} < {:.3f}", detail.empty() ? "" : "; ",
                          f.id, gaps, f.trend.inversions, last.train_gap.se, last.ks, last.ks_null_q99);
  }
  return {ok, detail};
}

Outcome criterion7() {
  const Campaign& c = universality_campaign();
  bool ok = c.report.families.size() == 2;
  std::string detail;
  for (const FamilyReport& f : c.report.families) {
    const SizeReport& last = f.sizes.back();
    const bool fam_ok = std::abs(last.test_gap.estimate) <= 3.0 * last.test_gap_se;
    ok = ok && fam_ok;
    detail += fmt::format("{}{}: |test gap| {:.2e} vs 3 SE {:.2e}", detail.empty() ? "" : "; ", f.id,
                          std::abs(last.test_gap.estimate), 3.0 * last.test_gap_se);
  }
  return {ok, detail};
}

Outcome criterion8() {
  FamilySpec lin;
  lin.id = "linear";
  lin.kind = FamilyKind::LinearIndependent;
  lin.sigma_rho = 0.5;
  ProblemSpec ps;
  ps.loss = LossKind::Squared;
  ps.lambda = 0.1;
  const FamilyInstance inst = make_family_instance(lin, ps, 200, 800);
  const std::vector<double> grid = {-0.1, -0.01, 0.01, 0.1};
  int sandwich_bad = 0, width_bad = 0;
  double worst_ratio = 0.0;
  for (int r = 0; r < 20; ++r) {
    const TrialSeeds seeds = trial_seeds(801, "linear", inst.size.n, r);
    const TrialData data = sample_trial_data(inst, seeds);
    const FeatureSource src = [&](Index n, std::uint64_t s) { return inst.sample_g(n, s); };
    const FrozenTestSet test = make_frozen_test_set(inst.problem, src, 4000, seeds.test_g);
    const FrozenTestRisk term(inst.problem, test);
    SolverConfig cfg;
    cfg.seed = derive_seed(seeds.trial, {hash_tag("solver")});
    const auto sw = perturbed_sweep(inst.problem, data.X, data.y_x, term, grid, cfg);
    const double r0 = sw.test_at_theta0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double s = grid[i];
      const double slack = 2.0 * (sw.solver_gap[i] + sw.solver_gap_0);
      // s D(s) <= s R0 + slack, i.e. D(s) <= R0 for s > 0 and D(s) >= R0 for s < 0
      if (sw.quarantined[i] || s * sw.D[i] > s * r0 + slack) ++sandwich_bad;
    }
    const double w_small = sw.D[1] - sw.D[2];
    const double w_large = sw.D[0] - sw.D[3];
    if (w_small < 0.0 || w_large < 0.0 || w_small > w_large) ++width_bad;
    worst_ratio = std::max(worst_ratio, w_small / w_large);
  }
  return {sandwich_bad == 0 && width_bad == 0,
          fmt::format("sandwich violations {}, width violations {}, max width ratio (0.01 vs 0.1) {:.3f}", sandwich_bad,
                      width_bad, worst_ratio)};
}

Outcome criterion9() {
  FamilySpec nt;
  nt.id = "nt";
  nt.kind = FamilyKind::NeuralTangent;
  nt.activation = Activation::shifted_sine_nt();
  nt.m_over_d = 1.0;
  nt.gamma_p = 0.75;
  nt.cov_mode = CovarianceMode::Empirical;
  nt.d_ladder = {28};
  CampaignConfig cfg;
  cfg.master_seed = 900;
  cfg.families = {nt};
  cfg.trials = 20;
  cfg.n_test = 2000;
  cfg.problem.loss = LossKind::Huber;
  cfg.problem.lambda = 0.1;
  cfg.problem.tau = 0.5;
  const auto trials = run_trials(cfg);
  const auto rep = build_report(trials, ReportOptions{});
  const SizeReport& s = rep.families.at(0).sizes.at(0);
  const double gap = s.train_gap.estimate, se = s.train_gap.se;
  const double miss = s.train_gap.ci.contains(0.0) ? 0.0 : std::min(std::abs(s.train_gap.ci.lo), std::abs(s.train_gap.ci.hi));
  const std::string status = miss == 0.0 ? "CI covers 0" : fmt::format("CI misses 0 by {:.2f} SE", miss / se);
  const bool shape = s.n == 1046 && s.p == 784 && s.trials == 20;
  return {shape && miss <= 3.0 * se,
          fmt::format("n={} p={} T={}, mean gap {:.2e}, SE {:.2e}, {}", s.n, s.p, s.trials, gap, se, status)};
}

Outcome criterion10() {
  const Campaign& c = universality_campaign();
  CampaignConfig again = c.config;
  again.threads = 2;
  const auto second = run_trials(again);
  const std::string a = trials_to_csv(c.trials), b = trials_to_csv(second);
  return {a == b, fmt::format("{} bytes, {}", a.size(), a == b ? "identical" : "different")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria = {criterion1, criterion2, criterion3, criterion4, criterion5,
                                                         criterion6, criterion7, criterion8, criterion9, criterion10};
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failures = 0;
  for (int k = 1; k <= static_cast<int>(criteria.size()); ++k) {
    if (!selected.empty() && !selected.count(k)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k - 1]();
    } catch (const std::exception& e) {
      o = {false, fmt::format("exception: {}", e.what())};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    fmt::print("{} criterion {}: {} [{:.1f} s]\n", o.pass ? "PASS" : "FAIL", k, o.detail, secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
