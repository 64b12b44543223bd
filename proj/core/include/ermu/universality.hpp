#pragma once

#include "ermu/activation.hpp"
#include "ermu/erm_problem.hpp"
#include "ermu/feature_models.hpp"
#include "ermu/gaussian_equiv.hpp"
#include "ermu/solver.hpp"
#include "ermu/types.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ermu {

enum class FamilyKind { RandomFeatures, NeuralTangent, LinearIndependent, GaussianControl };

std::string to_string(FamilyKind kind);
FamilyKind parse_family_kind(std::string_view name);

/// Per-family experiment parameters.
struct FamilySpec {
  std::string id;
  FamilyKind kind = FamilyKind::LinearIndependent;
  Activation activation = Activation::tanh_rf();
  double gamma_p = 0.75;      ///< p / n (RF, linear, control)
  double d_over_p = 0.5;      ///< RF input dimension ratio
  double m_over_d = 1.0;      ///< NT width ratio
  std::vector<int> d_ladder;  ///< NT sizes by d; empty uses the global ladder
  double radius = 3.0;        ///< R of the family's constraint set
  /// unset: linf-ball (RF), nt-operator-ball (NT), l2-ball (linear, control)
  std::optional<ConstraintKind> constraint;
  double nu = 1.0;            ///< linear / control entry variance
  EntryLaw entry_law = EntryLaw::Rademacher;
  double sigma_rho = 0.0;     ///< AR(1) correlation of Sigma (linear / control)
  double op_norm_bound = 10.0;
  std::optional<CovarianceMode> cov_mode;  ///< unset: per-family default
  EquivalentOptions equiv;
};

/// Problem template; Theta* and the constraint are filled per family/size.
struct ProblemSpec {
  LossKind loss = LossKind::Huber;
  double loss_delta = 1.0;
  LabelKind label = LabelKind::Linear;
  double tau = 0.5;
  double label_bound = 3.0;  ///< clipped-linear B
  double label_scale = 0.1;  ///< sign-smooth s
  NoiseLaw noise = NoiseLaw::Gaussian;
  double lambda = 0.1;
  Index k = 1;
  double theta_star_norm = 1.0;
};

struct CampaignConfig {
  std::uint64_t master_seed = 1;
  std::vector<FamilySpec> families;
  std::vector<int> ladder = {200, 400, 800};
  int trials = 50;
  ProblemSpec problem;
  SolverConfig solver;
  Index n_test = 4000;
  int threads = 1;
};

struct SizePoint {
  Index n = 0;
  Index p = 0;
  Index d = 0;
  Index m = 0;
};

/// RF: p = round(n gamma_p), d = round(p d_over_p). Linear/control:
/// p = round(n gamma_p). NT (base is d): m = round(m_over_d d), p = m d,
/// n = ceil(p / gamma_p).
SizePoint derive_size(const FamilySpec& family, int base);
/// Base sizes the family runs on (d_ladder for NT when given).
std::vector<int> family_ladder(const FamilySpec& family, std::span<const int> ladder);

/// Everything frozen for one (family, size): the feature model, its Gaussian
/// equivalent and the problem with Theta* and C_p filled in. Immutable and
/// shared by all trials of that configuration.
struct FamilyInstance {
  FamilySpec spec;
  SizePoint size;
  std::shared_ptr<const FeatureModel> model;  ///< null for the Gaussian control
  std::shared_ptr<const GaussianEquivalent> equivalent;
  ErmProblem problem;

  /// Draws the feature-model arm (an independent Gaussian draw for the control).
  Matrix sample_x(Index n, std::uint64_t seed) const;
  Matrix sample_g(Index n, std::uint64_t seed) const;
};

FamilyInstance make_family_instance(const FamilySpec& spec, const ProblemSpec& problem,
                                    int base_size, std::uint64_t master_seed);

ErmProblem make_problem(const ProblemSpec& spec, Matrix theta_star, ConstraintSet constraint);

/// Seeds used inside one trial. Both arms read the same noise stream.
struct TrialSeeds {
  std::uint64_t trial = 0;
  std::uint64_t x = 0;
  std::uint64_t g = 0;
  std::uint64_t noise = 0;
  std::uint64_t test_x = 0;
  std::uint64_t test_g = 0;
};

TrialSeeds trial_seeds(std::uint64_t master_seed, const std::string& family_id, Index n, int trial);

/// Matched data for one trial: X, G and labels built from one noise vector.
struct TrialData {
  Matrix X;
  Matrix G;
  Vector eps;
  Vector y_x;
  Vector y_g;
};

TrialData sample_trial_data(const FamilyInstance& inst, const TrialSeeds& seeds);

enum TrialFlag : unsigned {
  kFlagNone = 0,
  kFlagMaxIters = 1u << 0,
  kFlagDiverged = 1u << 1,
  kFlagNonLipschitz = 1u << 2,
};

std::string flags_to_string(unsigned flags);
unsigned flags_from_string(std::string_view s);

struct ArmResult {
  double train_opt = 0.0;
  RiskEstimate test_x;  ///< R^x at this arm's minimizer
  RiskEstimate test_g;  ///< R^g at this arm's minimizer
  int iterations = 0;
  unsigned flags = kFlagNone;
  bool quarantined() const { return (flags & kFlagDiverged) != 0; }
};

struct TrialResult {
  std::string family;
  Index n = 0;
  Index p = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  ArmResult x_arm;
  ArmResult g_arm;
};

/// Runs every (family, size, trial) unit on a bounded worker pool; the result
/// is sorted by (family order, n, trial) regardless of scheduling.
std::vector<TrialResult> run_trials(const CampaignConfig& config);

/// Single unit, exposed for tests and the selftest.
TrialResult run_single_trial(const FamilyInstance& inst, std::uint64_t master_seed, int trial,
                             const SolverConfig& solver, Index n_test);

/// A fixed sample for the test-risk term: rows of G with labels y.
struct FrozenTestSet {
  Matrix G;
  Vector y;
};

FrozenTestSet make_frozen_test_set(const ErmProblem& problem, const FeatureSource& source,
                                   Index n_test, std::uint64_t seed);

/// Mean loss (no regularizer) over a frozen sample, as a deterministic objective.
class FrozenTestRisk final : public Objective {
 public:
  FrozenTestRisk(const ErmProblem& problem, const FrozenTestSet& set);
  double value(const Matrix& theta) const override;
  double value_and_gradient(const Matrix& theta, Matrix& grad) const override;

 private:
  EmpiricalRisk risk_;
};

struct PerturbedRiskSweep {
  std::vector<double> s_grid;
  std::vector<double> risk_star;  ///< min of R_n + s R_test per s
  std::vector<double> D;          ///< (risk_star_s - risk_star_0) / s
  /// grad_map_norm^2 / (2 mu) with mu the regularizer's strong convexity;
  /// infinite without a ridge term.
  std::vector<double> solver_gap;
  std::vector<bool> quarantined;
  double risk_star_0 = 0.0;
  double solver_gap_0 = 0.0;
  double test_at_theta0 = 0.0;    ///< R_test at the unperturbed minimizer
  Matrix theta0;
};

/// Every perturbed solve starts at theta0, so with a monotone solver
/// R*_s <= R_n(theta0) + s R_test(theta0) holds exactly and the sandwich
/// D(s) <= R_test(theta0) <= D(-s) does not depend on solver accuracy.
/// Throws InvalidArgument unless s_grid is symmetric about 0 and excludes 0.
PerturbedRiskSweep perturbed_sweep(const ErmProblem& problem, const Matrix& X, const Vector& y,
                                   const Objective& test_term, std::span<const double> s_grid,
                                   const SolverConfig& cfg);

struct NearMinimizerLevel {
  double t = 0.0;
  double test_risk = 0.0;
  double train_risk = 0.0;  ///< R_n at the returned point
  double residual = 0.0;    ///< max(0, R_n - t) at the returned point
  bool infeasible = false;
};

struct NearMinimizerProfile {
  double risk_star = 0.0;
  double test_at_theta_hat = 0.0;
  std::vector<NearMinimizerLevel> levels;
};

/// For each t: minimize R_test subject to R_n <= t over C_p (R_n includes the
/// regularizer). Uses the Lagrangian path Theta_s = argmin R_n + s R_test,
/// bisecting log s for the boundary R_n(Theta_s) = t; every solve starts at
/// theta_hat. Each level reports the smallest R_test over all evaluated points
/// with R_n <= t, so results dominate theta_hat and are monotone in t.
/// Levels below R_n(theta_hat) are flagged infeasible (test_risk = NaN).
NearMinimizerProfile min_test_over_near_minimizers(const ErmProblem& problem, const Matrix& X,
                                                   const Vector& y, const Objective& test_term,
                                                   std::span<const double> t_levels,
                                                   const SolverConfig& cfg);

}  // namespace ermu
