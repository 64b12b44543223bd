#pragma once

#include "ermu/erm_problem.hpp"
#include "ermu/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ermu {

enum class CandidateConstruction { RandomNet, SolutionCloud };

/// Finite stand-in for an alpha-net of C_p^k. Every point is feasible.
struct CandidateSet {
  std::vector<Matrix> points;
  CandidateConstruction construction = CandidateConstruction::RandomNet;
  double alpha = 0.0;

  std::size_t size() const { return points.size(); }

  /// M projected Gaussian draws with entries N(0, scale^2 / p).
  static CandidateSet random_net(const ConstraintSet& set, Index p, Index k, std::size_t count,
                                 double scale, std::uint64_t seed);

  /// center plus count-1 perturbations of Frobenius radius alpha, alpha/2,
  /// alpha/4, ... (cycling), each projected into the set.
  static CandidateSet solution_cloud(const Matrix& center, const ConstraintSet& set,
                                     std::size_t count, double alpha, std::uint64_t seed);
};

/// -(1/(n beta)) log sum_j exp(-beta n v_j), evaluated with a max shift.
/// Satisfies min v - log(M)/(n beta) <= f <= min v.
double softmin(std::span<const double> values, Index n, double beta);

/// Shannon entropy of the Gibbs weights p_j ~ exp(-beta n v_j).
double gibbs_entropy(std::span<const double> values, Index n, double beta);

std::vector<double> candidate_risks(const CandidateSet& candidates, const ErmProblem& problem,
                                    const Matrix& X, const Vector& y);

double free_energy(const CandidateSet& candidates, const ErmProblem& problem, const Matrix& X,
                   const Vector& y, double beta);

/// U_t = sin(t) X + cos(t) G on a grid in [0, pi/2]; the endpoints return G
/// and X exactly.
struct InterpolationPath {
  Matrix X;
  Matrix G;
  std::vector<double> grid;

  Matrix at(double t) const;
};

struct PathPoint {
  double t = 0.0;
  double f = 0.0;
  /// |f(t_{i+1}) - f(t_i)| / (t_{i+1} - t_i) for the segment starting here;
  /// zero on the last point.
  double segment_slope = 0.0;
};

/// Free energy along the path. Labels are regenerated as eta(Theta*^T u_{t,i},
/// eps_i) with the same eps at every t. Throws InvalidArgument when the grid
/// is unsorted or leaves [0, pi/2].
std::vector<PathPoint> free_energy_path(const InterpolationPath& path,
                                        const CandidateSet& candidates, const ErmProblem& problem,
                                        const Vector& eps, double beta);

/// Upper bound on |d R_n(Theta; U_t) / dt| over candidates and t, from data
/// norms. With r_i = ||x_i|| + ||g_i|| (which bounds both ||u_{t,i}|| and
/// ||d u_{t,i}/dt||), A = max ||theta_j|| over candidates and B = sum ||theta*_j||:
///   (1/n) sum_i (D1_i A + D2_i eta_v B) r_i,
/// where D1_i, D2_i bound |dL/dyhat| and |dL/dy| at sample i (constants for
/// huber and pseudo-huber, data-dependent for logistic and squared).
double path_slope_bound(const InterpolationPath& path, const CandidateSet& candidates,
                        const ErmProblem& problem, const Vector& eps);

struct SandwichEntry {
  double beta = 0.0;
  double f = 0.0;
  double lower = 0.0;  ///< min - log(M)/(n beta)
  double upper = 0.0;  ///< min
  double entropy = 0.0;
  double dfdbeta = 0.0;  ///< H / (beta^2 n)
  bool bounds_ok = false;
};

struct SandwichReport {
  std::vector<SandwichEntry> entries;
  bool monotone = true;
  std::vector<double> violations;  ///< offending beta values
  bool ok() const { return violations.empty() && monotone; }
};

SandwichReport entropy_sandwich_check(const CandidateSet& candidates, const ErmProblem& problem,
                                      const Matrix& X, const Vector& y,
                                      std::span<const double> beta_grid);

std::string to_string(CandidateConstruction c);

}  // namespace ermu
