#include "ermu/solver.hpp"

#include "ermu/rng.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>

namespace ermu {

double gradient_mapping_norm(const ConstraintSet& set, const Matrix& theta, const Matrix& grad) {
  return (theta - set.project(Matrix(theta - grad))).norm();
}

ErmSolution minimize_projected(const Objective& objective, const ConstraintSet& set,
                               const Matrix& init, const SolverConfig& cfg) {
  if (cfg.max_iters < 0 || !(cfg.tol >= 0.0) || !(cfg.initial_step > 0.0) || !(cfg.shrink > 0.0 && cfg.shrink < 1.0))
    throw InvalidArgument("minimize_projected: bad solver configuration");

  ErmSolution sol;
  Matrix x = set.project(init);
  Matrix g;
  double f = objective.value_and_gradient(x, g);
  if (!std::isfinite(f)) throw SolverDiverged("objective is not finite at the starting point", 0);
  if (cfg.record_trace) sol.trace.push_back(f);

  double step = cfg.initial_step;
  double gm = gradient_mapping_norm(set, x, g);
  int it = 0;
  bool stalled = false;
  bool precision_floor = false;
  Matrix xn, gn;
  while (gm > cfg.tol && it < cfg.max_iters) {
    double t = std::min(2.0 * step, cfg.initial_step);
    bool accepted = false;
    double fn = 0.0;
    for (int bt = 0; bt < 200; ++bt) {
      xn = set.project(Matrix(x - t * g));
      const Matrix dx = xn - x;
      if (dx.squaredNorm() == 0.0) {
        // At the first trial a fixed point of the projected step is stationary;
        // later it only means the step underflowed.
        stalled = bt == 0;
        break;
      }
      const double slope = std::min(0.0, (g.array() * dx.array()).sum());
      fn = objective.value_and_gradient(xn, gn);
      if (std::isfinite(fn) && fn <= f + cfg.armijo * slope && fn <= f) {
        accepted = true;
        break;
      }
      t *= cfg.shrink;
    }
    if (!accepted) {
      if (!stalled && !std::isfinite(fn) && fn == fn) break;  // overflow only: keep the last good point
      if (std::isnan(fn)) throw SolverDiverged("objective is NaN", it + 1);
      // The predicted decrease is below the resolution of f: nothing left to gain.
      precision_floor = 0.5 * step * gm * gm <= 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(f));
      break;
    }
    x.swap(xn);
    g.swap(gn);
    f = fn;
    step = t;
    ++it;
    gm = gradient_mapping_norm(set, x, g);
    if (cfg.record_trace) sol.trace.push_back(f);
  }
  if (std::isnan(f)) throw SolverDiverged("objective is NaN", it);

  sol.theta_hat = std::move(x);
  sol.objective = f;
  sol.grad_map_norm = stalled ? 0.0 : gm;
  sol.iterations = it;
  sol.converged = stalled || precision_floor || gm <= cfg.tol;
  return sol;
}

ErmSolution solve_objective(const Objective& objective, const ConstraintSet& set, Index p, Index k,
                            bool convex, const SolverConfig& cfg, const std::optional<Matrix>& init) {
  if (p < 1 || k < 1) throw InvalidArgument("solve: parameter shape must be positive");
  const int restarts = cfg.restarts > 0 ? cfg.restarts : (convex ? 1 : 8);
  ErmSolution best;
  best.objective = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Matrix start;
    if (r == 0) {
      start = init ? *init : Matrix::Zero(p, k);
      if (start.rows() != p || start.cols() != k) throw InvalidArgument("solve: initial point has wrong shape");
    } else {
      start = standard_normal(p, k, derive_seed(cfg.seed, {static_cast<std::uint64_t>(r)})) *
              (cfg.init_scale / std::sqrt(static_cast<double>(p)));
    }
    ErmSolution sol = minimize_projected(objective, set, start, cfg);
    if (sol.objective < best.objective) best = std::move(sol);  // strict: ties keep the lower index
  }
  best.restarts_used = restarts;
  return best;
}

ErmSolution solve_erm(const ErmProblem& problem, const Matrix& X, const Vector& y,
                      const SolverConfig& cfg, const std::optional<Matrix>& init) {
  if (problem.k < 1) throw InvalidArgument("solve_erm: k must be >= 1");
  const EmpiricalRisk risk(problem, X, y);
  return solve_objective(risk, problem.constraint, X.cols(), problem.k, problem.is_convex(), cfg, init);
}

RidgeSolution solve_ridge_closed_form(const Matrix& X, const Vector& y, double lambda) {
  if (X.rows() == 0) throw InvalidArgument("solve_ridge_closed_form: n = 0");
  if (X.rows() != y.size()) throw InvalidArgument("solve_ridge_closed_form: X rows and y length differ");
  if (!(lambda >= 0.0)) throw InvalidArgument("solve_ridge_closed_form: lambda must be >= 0");
  const double n = static_cast<double>(X.rows());
  const Index p = X.cols();
  Matrix A = X.transpose() * X / n;
  A.diagonal().array() += lambda;
  const Vector b = X.transpose() * y / n;

  Eigen::LLT<Matrix> llt(A);
  if (llt.info() != Eigen::Success) {
    const double jitter = 1e-12 * std::max(A.trace() / static_cast<double>(p), 1e-300);
    A.diagonal().array() += jitter;
    llt.compute(A);
    if (llt.info() != Eigen::Success) throw LinearSolveError("ridge normal equations are singular");
  }
  RidgeSolution out;
  out.theta = llt.solve(b);
  if (!out.theta.allFinite()) throw LinearSolveError("ridge solve produced non-finite values");
  out.objective = (X * out.theta - y).squaredNorm() / n + lambda * out.theta.squaredNorm();
  return out;
}

}  // namespace ermu
