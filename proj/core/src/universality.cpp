#include "ermu/universality.hpp"

#include "ermu/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

namespace ermu {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

std::string to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::RandomFeatures: return "random-features";
    case FamilyKind::NeuralTangent: return "neural-tangent";
    case FamilyKind::LinearIndependent: return "linear-independent";
    case FamilyKind::GaussianControl: return "gaussian-control";
  }
  return "?";
}

FamilyKind parse_family_kind(std::string_view name) {
  if (name == "random-features") return FamilyKind::RandomFeatures;
  if (name == "neural-tangent") return FamilyKind::NeuralTangent;
  if (name == "linear-independent") return FamilyKind::LinearIndependent;
  if (name == "gaussian-control") return FamilyKind::GaussianControl;
  throw InvalidArgument("unknown family kind '" + std::string(name) + "'");
}

SizePoint derive_size(const FamilySpec& f, int base) {
  if (base < 1) throw InvalidArgument("size ladder entries must be positive");
  if (!(f.gamma_p > 0.0)) throw InvalidArgument("gamma_p must be positive");
  SizePoint s;
  switch (f.kind) {
    case FamilyKind::RandomFeatures:
      if (!(f.d_over_p > 0.0)) throw InvalidArgument("d_over_p must be positive");
      s.n = base;
      s.p = std::max<Index>(1, std::llround(base * f.gamma_p));
      s.d = std::max<Index>(1, std::llround(static_cast<double>(s.p) * f.d_over_p));
      break;
    case FamilyKind::LinearIndependent:
    case FamilyKind::GaussianControl:
      s.n = base;
      s.p = std::max<Index>(1, std::llround(base * f.gamma_p));
      s.d = s.p;
      break;
    case FamilyKind::NeuralTangent:
      if (!(f.m_over_d > 0.0)) throw InvalidArgument("m_over_d must be positive");
      s.d = base;
      s.m = std::max<Index>(1, std::llround(f.m_over_d * base));
      s.p = s.m * s.d;
      s.n = static_cast<Index>(std::ceil(static_cast<double>(s.p) / f.gamma_p - 1e-9));
      break;
  }
  return s;
}

std::vector<int> family_ladder(const FamilySpec& family, std::span<const int> ladder) {
  if (family.kind == FamilyKind::NeuralTangent)
    return family.d_ladder.empty() ? std::vector<int>{20, 28, 40} : family.d_ladder;
  return {ladder.begin(), ladder.end()};
}

Matrix FamilyInstance::sample_x(Index n, std::uint64_t seed) const {
  if (model) return model->sample_features(n, seed);
  return sample_gaussian(*equivalent, n, seed);
}

Matrix FamilyInstance::sample_g(Index n, std::uint64_t seed) const {
  return sample_gaussian(*equivalent, n, seed);
}

ErmProblem make_problem(const ProblemSpec& spec, Matrix theta_star, ConstraintSet constraint) {
  if (spec.k < 1) throw InvalidArgument("k must be >= 1");
  ErmProblem prob;
  switch (spec.loss) {
    case LossKind::Logistic: prob.loss = Loss::logistic(); break;
    case LossKind::Huber: prob.loss = Loss::huber(spec.loss_delta); break;
    case LossKind::Squared: prob.loss = Loss::squared(); break;
    case LossKind::PseudoHuber: prob.loss = Loss::pseudo_huber(spec.loss_delta); break;
  }
  switch (spec.label) {
    case LabelKind::Linear: prob.labeler = Labeler::linear(spec.tau, spec.noise); break;
    case LabelKind::ClippedLinear:
      prob.labeler = Labeler::clipped_linear(spec.tau, spec.label_bound, spec.noise);
      break;
    case LabelKind::SignSmooth:
      prob.labeler = Labeler::sign_smooth(spec.tau, spec.label_scale, spec.noise);
      break;
  }
  prob.regularizer = spec.lambda > 0.0 ? Regularizer::ridge(spec.lambda) : Regularizer::none();
  prob.constraint = std::move(constraint);
  prob.theta_star = std::move(theta_star);
  prob.k = spec.k;
  return prob;
}

namespace {

ConstraintKind default_constraint(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::RandomFeatures: return ConstraintKind::LinfBall;
    case FamilyKind::NeuralTangent: return ConstraintKind::NtOperatorBall;
    default: return ConstraintKind::L2Ball;
  }
}

ConstraintSet make_constraint(const FamilySpec& f, const SizePoint& s) {
  switch (f.constraint.value_or(default_constraint(f.kind))) {
    case ConstraintKind::Unconstrained: return ConstraintSet::unconstrained();
    case ConstraintKind::L2Ball: return ConstraintSet::l2_ball(f.radius);
    case ConstraintKind::LinfBall: return ConstraintSet::linf_ball(f.radius);
    case ConstraintKind::NtOperatorBall:
      if (f.kind != FamilyKind::NeuralTangent)
        throw InvalidArgument("nt-operator-ball needs the neural-tangent family");
      return ConstraintSet::nt_operator_ball(f.radius, s.d, s.m);
  }
  throw InvalidArgument("unknown constraint");
}

// Rademacher signs scaled to the requested norm per column, or for NT a
// normalised Gaussian direction; projected into C_p either way.
Matrix make_theta_star(const FamilySpec& f, const SizePoint& s, Index k, double norm,
                       const ConstraintSet& set, std::uint64_t seed) {
  Matrix t = standard_normal(s.p, k, seed);
  if (f.kind == FamilyKind::NeuralTangent) {
    for (Index j = 0; j < k; ++j) t.col(j) *= norm / t.col(j).norm();
  } else {
    const double scale = norm / std::sqrt(static_cast<double>(s.p));
    t = t.unaryExpr([scale](double v) { return v < 0.0 ? -scale : scale; });
  }
  return set.project(t);
}

}  // namespace

FamilyInstance make_family_instance(const FamilySpec& spec, const ProblemSpec& problem,
                                    int base_size, std::uint64_t master_seed) {
  FamilyInstance inst;
  inst.spec = spec;
  inst.size = derive_size(spec, base_size);
  const SizePoint& s = inst.size;
  const std::uint64_t seed =
      derive_seed(master_seed, {hash_tag(spec.id), static_cast<std::uint64_t>(base_size)});
  const std::uint64_t w_seed = derive_seed(seed, {hash_tag("weights")});
  const std::uint64_t eq_seed = derive_seed(seed, {hash_tag("equivalent")});

  switch (spec.kind) {
    case FamilyKind::RandomFeatures:
      inst.model = std::make_shared<FeatureModel>(
          FeatureModel::random_features(sample_sphere_weights(s.d, s.p, w_seed), spec.activation));
      break;
    case FamilyKind::NeuralTangent:
      inst.model = std::make_shared<FeatureModel>(
          FeatureModel::neural_tangent(sample_sphere_weights(s.d, s.m, w_seed), spec.activation));
      break;
    case FamilyKind::LinearIndependent:
      inst.model = std::make_shared<FeatureModel>(FeatureModel::linear_independent(
          ar1_sigma_half(s.p, spec.sigma_rho), spec.nu, spec.entry_law, spec.op_norm_bound));
      break;
    case FamilyKind::GaussianControl: {
      if (!(spec.nu > 0.0)) throw InvalidArgument("nu must be positive");
      CovarianceProvenance prov;
      prov.mode = CovarianceMode::LinearExact;
      inst.equivalent = std::make_shared<GaussianEquivalent>(
          std::sqrt(spec.nu) * ar1_sigma_half(s.p, spec.sigma_rho), prov);
      break;
    }
  }
  if (inst.model) {
    const CovarianceMode mode = spec.cov_mode.value_or(default_covariance_mode(*inst.model));
    inst.equivalent =
        std::make_shared<GaussianEquivalent>(build_equivalent(*inst.model, mode, spec.equiv, eq_seed));
  }
  ConstraintSet set = make_constraint(spec, s);
  Matrix theta_star = make_theta_star(spec, s, problem.k, problem.theta_star_norm, set,
                                      derive_seed(seed, {hash_tag("theta-star")}));
  inst.problem = make_problem(problem, std::move(theta_star), std::move(set));
  return inst;
}

TrialSeeds trial_seeds(std::uint64_t master_seed, const std::string& family_id, Index n, int trial) {
  TrialSeeds s;
  s.trial = derive_seed(master_seed, {hash_tag(family_id), static_cast<std::uint64_t>(n),
                                      static_cast<std::uint64_t>(trial)});
  s.x = derive_seed(s.trial, {hash_tag("x")});
  s.g = derive_seed(s.trial, {hash_tag("g")});
  s.noise = derive_seed(s.trial, {hash_tag("noise")});
  s.test_x = derive_seed(s.trial, {hash_tag("test-x")});
  s.test_g = derive_seed(s.trial, {hash_tag("test-g")});
  return s;
}

TrialData sample_trial_data(const FamilyInstance& inst, const TrialSeeds& seeds) {
  const Index n = inst.size.n;
  TrialData d;
  d.X = inst.sample_x(n, seeds.x);
  d.G = inst.sample_g(n, seeds.g);
  d.eps = inst.problem.labeler.sample_noise(n, seeds.noise);
  d.y_x = labels_from_noise(inst.problem, d.X, d.eps);
  d.y_g = labels_from_noise(inst.problem, d.G, d.eps);
  return d;
}

std::string flags_to_string(unsigned flags) {
  std::string out;
  auto add = [&](unsigned bit, const char* name) {
    if (!(flags & bit)) return;
    if (!out.empty()) out += '|';
    out += name;
  };
  add(kFlagMaxIters, "max-iters");
  add(kFlagDiverged, "diverged");
  add(kFlagNonLipschitz, "non-lipschitz");
  return out;
}

unsigned flags_from_string(std::string_view s) {
  unsigned flags = kFlagNone;
  while (!s.empty()) {
    const auto bar = s.find('|');
    const std::string_view tok = s.substr(0, bar);
    if (tok == "max-iters") flags |= kFlagMaxIters;
    else if (tok == "diverged") flags |= kFlagDiverged;
    else if (tok == "non-lipschitz") flags |= kFlagNonLipschitz;
    else if (!tok.empty()) throw InvalidArgument("unknown trial flag '" + std::string(tok) + "'");
    if (bar == std::string_view::npos) break;
    s.remove_prefix(bar + 1);
  }
  return flags;
}

namespace {

// Frozen test sets are shared by both arms of a trial; they reproduce
// test_risk() draw for draw.
ArmResult solve_arm(const FamilyInstance& inst, const Matrix& X, const Vector& y,
                    const SolverConfig& solver, const FrozenTestSet& test_x,
                    const FrozenTestSet& test_g) {
  ArmResult arm;
  if (!inst.problem.loss.lipschitz()) arm.flags |= kFlagNonLipschitz;
  try {
    const ErmSolution sol = solve_erm(inst.problem, X, y, solver);
    arm.train_opt = sol.objective;
    arm.iterations = sol.iterations;
    if (!sol.converged) arm.flags |= kFlagMaxIters;
    arm.test_x = mean_loss(inst.problem, sol.theta_hat, test_x.G, test_x.y);
    arm.test_g = mean_loss(inst.problem, sol.theta_hat, test_g.G, test_g.y);
  } catch (const SolverDiverged& e) {
    arm.flags |= kFlagDiverged;
    arm.iterations = e.iteration();
    arm.train_opt = kNaN;
    arm.test_x = {kNaN, kNaN};
    arm.test_g = {kNaN, kNaN};
  }
  return arm;
}

}  // namespace

TrialResult run_single_trial(const FamilyInstance& inst, std::uint64_t master_seed, int trial,
                             const SolverConfig& solver, Index n_test) {
  const TrialSeeds seeds = trial_seeds(master_seed, inst.spec.id, inst.size.n, trial);
  const TrialData data = sample_trial_data(inst, seeds);
  SolverConfig cfg = solver;
  cfg.seed = derive_seed(seeds.trial, {hash_tag("solver")});
  TrialResult r;
  r.family = inst.spec.id;
  r.n = inst.size.n;
  r.p = inst.size.p;
  r.trial = trial;
  r.seed = seeds.trial;
  const FeatureSource src_x = [&inst](Index m, std::uint64_t s) { return inst.sample_x(m, s); };
  const FeatureSource src_g = [&inst](Index m, std::uint64_t s) { return inst.sample_g(m, s); };
  const FrozenTestSet test_x = make_frozen_test_set(inst.problem, src_x, n_test, seeds.test_x);
  const FrozenTestSet test_g = make_frozen_test_set(inst.problem, src_g, n_test, seeds.test_g);
  r.x_arm = solve_arm(inst, data.X, data.y_x, cfg, test_x, test_g);
  r.g_arm = solve_arm(inst, data.G, data.y_g, cfg, test_x, test_g);
  return r;
}

std::vector<TrialResult> run_trials(const CampaignConfig& config) {
  if (config.trials < 1) throw InvalidArgument("trials must be >= 1");
  if (config.n_test < 1) throw InvalidArgument("n_test must be >= 1");

  std::vector<FamilyInstance> instances;
  for (const FamilySpec& f : config.families)
    for (int base : family_ladder(f, config.ladder))
      instances.push_back(make_family_instance(f, config.problem, base, config.master_seed));

  const std::size_t per = static_cast<std::size_t>(config.trials);
  const std::size_t units = instances.size() * per;
  std::vector<TrialResult> results(units);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto worker = [&] {
    for (std::size_t u = next++; u < units; u = next++) {
      try {
        results[u] = run_single_trial(instances[u / per], config.master_seed,
                                      static_cast<int>(u % per), config.solver, config.n_test);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = units;
      }
    }
  };
  const int threads = std::max(1, std::min<int>(config.threads, static_cast<int>(units)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::stable_sort(results.begin(), results.end(), [](const TrialResult& a, const TrialResult& b) {
    if (a.family != b.family) return a.family < b.family;
    if (a.n != b.n) return a.n < b.n;
    return a.trial < b.trial;
  });
  return results;
}

FrozenTestSet make_frozen_test_set(const ErmProblem& problem, const FeatureSource& source,
                                   Index n_test, std::uint64_t seed) {
  if (n_test < 1) throw InvalidArgument("frozen test set needs n_test >= 1");
  FrozenTestSet set;
  set.G = source(n_test, derive_seed(seed, {1}));
  const Vector eps = problem.labeler.sample_noise(n_test, derive_seed(seed, {2}));
  set.y = labels_from_noise(problem, set.G, eps);
  return set;
}

FrozenTestRisk::FrozenTestRisk(const ErmProblem& problem, const FrozenTestSet& set)
    : risk_(problem, set.G, set.y, false) {}

double FrozenTestRisk::value(const Matrix& theta) const { return risk_.value(theta); }

double FrozenTestRisk::value_and_gradient(const Matrix& theta, Matrix& grad) const {
  return risk_.value_and_gradient(theta, grad);
}

namespace {

// a R_n + b R_test
class CombinedObjective final : public Objective {
 public:
  CombinedObjective(const Objective& train, const Objective& test, double a, double b)
      : train_(train), test_(test), a_(a), b_(b) {}
  double value(const Matrix& theta) const override {
    return a_ * train_.value(theta) + b_ * test_.value(theta);
  }
  double value_and_gradient(const Matrix& theta, Matrix& grad) const override {
    Matrix g2(theta.rows(), theta.cols());
    const double v = a_ * train_.value_and_gradient(theta, grad) + b_ * test_.value_and_gradient(theta, g2);
    grad = a_ * grad + b_ * g2;
    return v;
  }

 private:
  const Objective& train_;
  const Objective& test_;
  double a_, b_;
};

void check_s_grid(std::span<const double> s_grid) {
  if (s_grid.empty()) throw InvalidArgument("s grid is empty");
  for (double s : s_grid) {
    if (s == 0.0 || !std::isfinite(s)) throw InvalidArgument("s grid must exclude 0 and be finite");
    if (std::find(s_grid.begin(), s_grid.end(), -s) == s_grid.end())
      throw InvalidArgument("s grid is not symmetric about 0");
  }
}

}  // namespace

PerturbedRiskSweep perturbed_sweep(const ErmProblem& problem, const Matrix& X, const Vector& y,
                                   const Objective& test_term, std::span<const double> s_grid,
                                   const SolverConfig& cfg) {
  check_s_grid(s_grid);
  const EmpiricalRisk train(problem, X, y);
  const Index p = X.cols(), k = problem.k;
  const double mu = problem.regularizer.strong_convexity();
  auto gap_of = [mu](double gm) { return mu > 0.0 ? gm * gm / (2.0 * mu) : kInf; };

  PerturbedRiskSweep out;
  out.s_grid.assign(s_grid.begin(), s_grid.end());
  const ErmSolution base = solve_objective(train, problem.constraint, p, k, problem.is_convex(), cfg);
  out.theta0 = base.theta_hat;
  out.risk_star_0 = base.objective;
  out.solver_gap_0 = gap_of(base.grad_map_norm);
  out.test_at_theta0 = test_term.value(base.theta_hat);

  SolverConfig one = cfg;
  one.restarts = 1;
  for (double s : s_grid) {
    const CombinedObjective obj(train, test_term, 1.0, s);
    try {
      const ErmSolution sol = solve_objective(obj, problem.constraint, p, k, true, one, out.theta0);
      out.risk_star.push_back(sol.objective);
      out.D.push_back((sol.objective - out.risk_star_0) / s);
      out.solver_gap.push_back(gap_of(sol.grad_map_norm));
      out.quarantined.push_back(false);
    } catch (const SolverDiverged&) {
      out.risk_star.push_back(kNaN);
      out.D.push_back(kNaN);
      out.solver_gap.push_back(kInf);
      out.quarantined.push_back(true);
    }
  }
  return out;
}

NearMinimizerProfile min_test_over_near_minimizers(const ErmProblem& problem, const Matrix& X,
                                                   const Vector& y, const Objective& test_term,
                                                   std::span<const double> t_levels,
                                                   const SolverConfig& cfg) {
  const EmpiricalRisk train(problem, X, y);
  const Index p = X.cols(), k = problem.k;
  const ErmSolution base = solve_objective(train, problem.constraint, p, k, problem.is_convex(), cfg);
  const Matrix& theta_hat = base.theta_hat;

  NearMinimizerProfile out;
  out.risk_star = train.value(theta_hat);
  out.test_at_theta_hat = test_term.value(theta_hat);

  // (R_n, R_test) at every evaluated point; a level's answer is the best
  // point with R_n <= t, which makes the profile monotone by construction.
  std::vector<std::pair<double, double>> pool = {{out.risk_star, out.test_at_theta_hat}};
  SolverConfig one = cfg;
  one.restarts = 1;
  auto eval = [&](const Objective& obj) {
    const ErmSolution sol = solve_objective(obj, problem.constraint, p, k, true, one, theta_hat);
    pool.emplace_back(train.value(sol.theta_hat), test_term.value(sol.theta_hat));
    return pool.back();
  };

  bool have_free = false;
  std::pair<double, double> free_min;
  std::vector<std::size_t> order(t_levels.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return t_levels[a] < t_levels[b]; });

  out.levels.resize(t_levels.size());
  for (std::size_t idx : order) {
    const double t = t_levels[idx];
    NearMinimizerLevel& lvl = out.levels[idx];
    lvl.t = t;
    if (std::isnan(t) || t < out.risk_star) {
      lvl.infeasible = true;
      lvl.test_risk = kNaN;
      lvl.train_risk = kNaN;
      lvl.residual = std::isnan(t) ? kNaN : out.risk_star - t;
      continue;
    }
    try {
      if (!have_free) {
        const CombinedObjective only_test(train, test_term, 0.0, 1.0);
        free_min = eval(only_test);
        have_free = true;
      }
      if (free_min.first > t) {
        double lo = -12.0, hi = 6.0;  // log10 s
        for (int it = 0; it < 24; ++it) {
          const double mid = 0.5 * (lo + hi);
          const CombinedObjective obj(train, test_term, 1.0, std::pow(10.0, mid));
          (eval(obj).first <= t ? lo : hi) = mid;
        }
      }
    } catch (const SolverDiverged&) {
      // keep whatever was evaluated; theta_hat is always in the pool
    }
    lvl.test_risk = kInf;
    for (const auto& [rn, rt] : pool)
      if (rn <= t && rt < lvl.test_risk) {
        lvl.test_risk = rt;
        lvl.train_risk = rn;
      }
    lvl.residual = 0.0;
  }
  return out;
}

}  // namespace ermu
