#include "ermu/universality.hpp"

#include "ermu/rng.hpp"
#include "ermu/stats.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace ermu;

namespace {
FamilySpec linear_family(const std::string& id = "lin") {
  FamilySpec f;
  f.id = id;
  f.kind = FamilyKind::LinearIndependent;
  f.entry_law = EntryLaw::Rademacher;
  f.sigma_rho = 0.5;
  return f;
}

FamilySpec rf_family(const std::string& id = "rf") {
  FamilySpec f;
  f.id = id;
  f.kind = FamilyKind::RandomFeatures;
  f.cov_mode = CovarianceMode::HermiteExact;
  return f;
}

struct ConstantTerm final : Objective {
  double c;
  explicit ConstantTerm(double v) : c(v) {}
  double value(const Matrix&) const override { return c; }
  double value_and_gradient(const Matrix& t, Matrix& g) const override {
    g = Matrix::Zero(t.rows(), t.cols());
    return c;
  }
};

struct RidgeSetup {
  ErmProblem problem;
  Matrix X;
  Vector y;
  FrozenTestSet test;
};

RidgeSetup ridge_setup(Index n, Index p, std::uint64_t seed, LossKind loss = LossKind::Huber, double lambda = 0.1) {
  ProblemSpec ps;
  ps.loss = loss;
  ps.lambda = lambda;
  Matrix ts = Matrix::Constant(p, 1, 1.0 / std::sqrt(static_cast<double>(p)));
  RidgeSetup s{make_problem(ps, ts, ConstraintSet::l2_ball(3.0)), standard_normal(n, p, derive_seed(seed, {1})), {}, {}};
  if (loss == LossKind::Logistic) {
    s.problem.labeler = Labeler::sign_smooth(0.0, 0.05);
  }
  s.y = generate_labels(s.problem, s.X, derive_seed(seed, {2}));
  if (loss == LossKind::Logistic) s.y = s.y.array().sign();
  const FeatureSource gauss = [p](Index m, std::uint64_t sd) { return standard_normal(m, p, sd); };
  s.test = make_frozen_test_set(s.problem, gauss, 2000, derive_seed(seed, {3}));
  if (loss == LossKind::Logistic) s.test.y = s.test.y.array().sign();
  return s;
}
}  // namespace

TEST_CASE("size derivation") {
  const SizePoint lin = derive_size(linear_family(), 400);
  CHECK(lin.n == 400);
  CHECK(lin.p == 300);
  const SizePoint rf = derive_size(rf_family(), 200);
  CHECK(rf.p == 150);
  CHECK(rf.d == 75);
  FamilySpec nt;
  nt.kind = FamilyKind::NeuralTangent;
  nt.m_over_d = 1.0;
  const SizePoint s = derive_size(nt, 28);
  CHECK(s.d == 28);
  CHECK(s.m == 28);
  CHECK(s.p == 784);
  CHECK(s.n == 1046);
  nt.d_ladder = {20, 28};
  const std::vector<int> ladder = {100, 200, 400};
  CHECK(family_ladder(nt, ladder) == std::vector<int>{20, 28});
  CHECK(family_ladder(linear_family(), ladder) == ladder);
  for (auto k : {FamilyKind::RandomFeatures, FamilyKind::NeuralTangent, FamilyKind::LinearIndependent,
                 FamilyKind::GaussianControl})
    CHECK(parse_family_kind(to_string(k)) == k);
}

TEST_CASE("family instance defaults") {
  ProblemSpec ps;
  const FamilyInstance rf = make_family_instance(rf_family(), ps, 200, 1);
  CHECK(rf.problem.constraint.kind() == ConstraintKind::LinfBall);
  CHECK(rf.problem.constraint.contains(rf.problem.theta_star));
  CHECK(rf.equivalent->dim() == 150);
  CHECK(rf.sample_x(5, 3).cols() == 150);
  CHECK(rf.sample_g(5, 3).cols() == 150);
  const FamilyInstance lin = make_family_instance(linear_family(), ps, 200, 1);
  CHECK(lin.problem.constraint.kind() == ConstraintKind::L2Ball);
  CHECK(lin.problem.theta_star.norm() == doctest::Approx(1.0));
  const FamilyInstance again = make_family_instance(rf_family(), ps, 200, 1);
  CHECK(again.problem.theta_star == rf.problem.theta_star);
  CHECK(again.model->weights() == rf.model->weights());
}

TEST_CASE("both arms share the label noise") {
  const FamilyInstance inst = make_family_instance(rf_family(), {}, 100, 7);
  const TrialSeeds seeds = trial_seeds(7, "rf", inst.size.n, 0);
  const TrialData d = sample_trial_data(inst, seeds);
  CHECK(d.y_x == labels_from_noise(inst.problem, d.X, d.eps));
  CHECK(d.y_g == labels_from_noise(inst.problem, d.G, d.eps));
  CHECK(seeds.x != seeds.g);
  CHECK(seeds.noise != seeds.x);
  // replacing the feature matrix leaves the noise stream untouched
  TrialSeeds other = seeds;
  other.x = derive_seed(seeds.x, {99});
  CHECK(sample_trial_data(inst, other).eps == d.eps);
  CHECK(trial_seeds(7, "rf", inst.size.n, 1).noise != seeds.noise);
}

TEST_CASE("one trial at one size means two solves, reproducibly") {
  CampaignConfig cfg;
  cfg.master_seed = 11;
  cfg.families = {linear_family(), rf_family()};
  cfg.ladder = {80};
  cfg.trials = 1;
  cfg.n_test = 500;
  const auto a = run_trials(cfg);
  REQUIRE(a.size() == 2);
  CHECK(a[0].family == "lin");
  CHECK(a[1].family == "rf");
  for (const auto& t : a) {
    CHECK(t.x_arm.iterations > 0);
    CHECK(t.g_arm.iterations > 0);
    CHECK(std::isfinite(t.x_arm.train_opt));
    CHECK(std::isfinite(t.g_arm.test_g.value));
  }
  cfg.threads = 2;
  const auto b = run_trials(cfg);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].seed == b[i].seed);
    CHECK(a[i].x_arm.train_opt == b[i].x_arm.train_opt);
    CHECK(a[i].g_arm.train_opt == b[i].g_arm.train_opt);
    CHECK(a[i].x_arm.test_x.value == b[i].x_arm.test_x.value);
  }
}

TEST_CASE("trial flags round-trip") {
  CHECK(flags_to_string(kFlagNone).empty());
  const unsigned f = kFlagMaxIters | kFlagNonLipschitz;
  CHECK(flags_from_string(flags_to_string(f)) == f);
  CHECK(flags_from_string(flags_to_string(kFlagDiverged)) == kFlagDiverged);
}

TEST_CASE("Gaussian control has no train gap at n = 400") {
  FamilySpec ctrl;
  ctrl.id = "control";
  ctrl.kind = FamilyKind::GaussianControl;
  CampaignConfig cfg;
  cfg.master_seed = 5;
  cfg.families = {ctrl};
  cfg.ladder = {400};
  cfg.trials = 50;
  cfg.n_test = 500;
  const auto res = run_trials(cfg);
  std::vector<double> gaps;
  for (const auto& t : res) gaps.push_back(t.x_arm.train_opt - t.g_arm.train_opt);
  const double se = sample_sd(gaps) / std::sqrt(50.0);
  CHECK(std::abs(sample_mean(gaps)) <= 3.0 * se);
}

TEST_CASE("affine perturbation gives a flat difference quotient") {
  const RidgeSetup s = ridge_setup(60, 10, 1);
  const ConstantTerm c(0.7);
  const std::vector<double> grid = {-0.1, -0.01, 0.01, 0.1};
  SolverConfig cfg;
  cfg.tol = 1e-10;
  const auto sw = perturbed_sweep(s.problem, s.X, s.y, c, grid, cfg);
  for (double d : sw.D) CHECK(d == doctest::Approx(0.7).epsilon(1e-6));
  const std::vector<double> asym = {-0.1, 0.01};
  CHECK_THROWS_AS(perturbed_sweep(s.problem, s.X, s.y, c, asym, cfg), InvalidArgument);
  const std::vector<double> zero = {-0.1, 0.0, 0.1};
  CHECK_THROWS_AS(perturbed_sweep(s.problem, s.X, s.y, c, zero, cfg), InvalidArgument);
}

TEST_CASE("convex sandwich around the unperturbed test risk") {
  const RidgeSetup s = ridge_setup(100, 40, 2, LossKind::Squared);
  const FrozenTestRisk term(s.problem, s.test);
  const std::vector<double> grid = {-0.1, -0.01, 0.01, 0.1};
  const auto sw = perturbed_sweep(s.problem, s.X, s.y, term, grid, {});
  REQUIRE(sw.D.size() == 4);
  const double r0 = sw.test_at_theta0;
  for (std::size_t i = 0; i < 4; ++i) {
    const double slack = 2.0 * (sw.solver_gap[i] + sw.solver_gap_0) / std::abs(grid[i]);
    if (grid[i] > 0) CHECK(sw.D[i] <= r0 + slack);
    else CHECK(sw.D[i] >= r0 - slack);
  }
  // D(-s) - D(s) at s = 0.1 is at least as wide as at s = 0.01
  CHECK(sw.D[0] - sw.D[3] >= sw.D[1] - sw.D[2] - 1e-9);
  CHECK(sw.D[1] - sw.D[2] >= -1e-9);
}

TEST_CASE("near-minimizer profile") {
  const RidgeSetup s = ridge_setup(80, 20, 3);
  const FrozenTestRisk term(s.problem, s.test);
  SolverConfig cfg;
  cfg.tol = 1e-9;
  const auto base = solve_erm(s.problem, s.X, s.y, cfg);
  const double rstar = base.objective;
  const double inf = std::numeric_limits<double>::infinity();
  const std::vector<double> levels = {rstar - 0.01, rstar, rstar + 0.005, rstar + 0.02, rstar + 0.1, inf};
  const auto prof = min_test_over_near_minimizers(s.problem, s.X, s.y, term, levels, cfg);
  REQUIRE(prof.levels.size() == levels.size());
  CHECK(prof.levels[0].infeasible);
  CHECK(std::isnan(prof.levels[0].test_risk));
  CHECK(prof.levels[1].test_risk == doctest::Approx(term.value(base.theta_hat)).epsilon(1e-6));
  for (std::size_t i = 2; i < levels.size(); ++i) {
    CHECK_FALSE(prof.levels[i].infeasible);
    CHECK(prof.levels[i].residual == 0.0);
    CHECK(prof.levels[i].train_risk <= levels[i]);
    CHECK(prof.levels[i].test_risk <= prof.levels[i - 1].test_risk + 1e-6);
  }
  // t = inf: the unconstrained minimum of the test term over C_p
  const auto direct = solve_objective(term, s.problem.constraint, 20, 1, true, cfg);
  CHECK(prof.levels.back().test_risk == doctest::Approx(direct.objective).epsilon(1e-6));
}

TEST_CASE("near-minimizers dominate the ERM point for overparameterized logistic") {
  const RidgeSetup s = ridge_setup(30, 60, 4, LossKind::Logistic, 0.0);
  const FrozenTestRisk term(s.problem, s.test);
  const auto base = solve_erm(s.problem, s.X, s.y, {});
  const std::vector<double> levels = {base.objective + 0.05};
  const auto prof = min_test_over_near_minimizers(s.problem, s.X, s.y, term, levels, {});
  CHECK(prof.levels[0].test_risk <= term.value(base.theta_hat) + 1e-9);
}

TEST_CASE("frozen test risk matches the streaming estimate") {
  const FamilyInstance inst = make_family_instance(linear_family(), {}, 100, 3);
  const FeatureSource src = [&](Index n, std::uint64_t sd) { return inst.sample_g(n, sd); };
  const FrozenTestSet set = make_frozen_test_set(inst.problem, src, 1000, 17);
  const FrozenTestRisk risk(inst.problem, set);
  const Matrix theta = inst.problem.theta_star * 0.5;
  CHECK(risk.value(theta) == doctest::Approx(test_risk(inst.problem, theta, src, 1000, 17).value).epsilon(1e-13));
}
