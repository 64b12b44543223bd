#pragma once

#include "ermu/erm_problem.hpp"
#include "ermu/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace ermu {

struct SolverConfig {
  int max_iters = 5000;
  double tol = 1e-8;          ///< on the unit-step gradient-mapping norm
  int restarts = 0;           ///< 0 picks 1 for convex problems, 8 otherwise
  double initial_step = 1.0;  ///< also the largest step ever tried
  double shrink = 0.5;
  double armijo = 1e-4;
  double init_scale = 1.0;    ///< restart draws have entries N(0, init_scale^2 / p)
  std::uint64_t seed = 0;
  bool record_trace = false;
};

struct ErmSolution {
  Matrix theta_hat;
  double objective = 0.0;
  double grad_map_norm = 0.0;
  int iterations = 0;
  int restarts_used = 0;
  bool converged = false;
  std::vector<double> trace;  ///< objective per iteration when requested
};

/// Projected gradient descent with Armijo backtracking along the projection
/// arc: accept step t when f(P(x - t g)) <= f(x) + armijo * g^T (P(x - t g) - x).
/// Each iteration starts from twice the previous accepted step, capped at
/// initial_step. Throws SolverDiverged on a non-finite objective. A failed line
/// search counts as converged when the predicted decrease step*gm^2/2 is below
/// the floating-point resolution of f.
ErmSolution minimize_projected(const Objective& objective, const ConstraintSet& set,
                               const Matrix& init, const SolverConfig& cfg);

/// Restart 0 starts at the projection of `init` (zeros when absent); later
/// restarts start from projected Gaussian draws. Returns the lowest objective,
/// ties to the lowest restart index.
ErmSolution solve_erm(const ErmProblem& problem, const Matrix& X, const Vector& y,
                      const SolverConfig& cfg, const std::optional<Matrix>& init = std::nullopt);

/// Same restart policy for an arbitrary objective.
ErmSolution solve_objective(const Objective& objective, const ConstraintSet& set, Index p, Index k,
                            bool convex, const SolverConfig& cfg,
                            const std::optional<Matrix>& init = std::nullopt);

/// ||Theta - P(Theta - grad)||_F
double gradient_mapping_norm(const ConstraintSet& set, const Matrix& theta, const Matrix& grad);

struct RidgeSolution {
  Vector theta;
  double objective = 0.0;
};

/// argmin (1/n)||X theta - y||^2 + lambda ||theta||^2, i.e.
/// theta = (X^T X / n + lambda I)^{-1} X^T y / n.
RidgeSolution solve_ridge_closed_form(const Matrix& X, const Vector& y, double lambda);

}  // namespace ermu
