#pragma once

#include "ermu/types.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

namespace ermu {

enum class LossKind { Logistic, Huber, Squared, PseudoHuber };

/// Scalar loss L(yhat, y). The squared loss is not globally Lipschitz and is
/// admitted only as a ridge baseline; `lipschitz()` reports it.
class Loss {
 public:
  static Loss logistic() { return Loss(LossKind::Logistic, 1.0); }
  static Loss huber(double delta = 1.0);
  static Loss squared() { return Loss(LossKind::Squared, 1.0); }
  static Loss pseudo_huber(double delta = 1.0);

  LossKind kind() const { return kind_; }
  double delta() const { return delta_; }

  double value(double yhat, double y) const;
  /// dL/dyhat
  double derivative(double yhat, double y) const;

  bool lipschitz() const { return kind_ != LossKind::Squared; }
  /// Lipschitz modulus in yhat; infinity for the squared loss.
  double lipschitz_constant() const;

 private:
  Loss(LossKind kind, double delta) : kind_(kind), delta_(delta) {}
  LossKind kind_;
  double delta_;
};

enum class LabelKind { Linear, ClippedLinear, SignSmooth };
enum class NoiseLaw { Gaussian, Rademacher };

/// y = eta(v, eps) with v the (summed) projection Theta*^T x.
class Labeler {
 public:
  static Labeler linear(double tau, NoiseLaw noise = NoiseLaw::Gaussian);
  static Labeler clipped_linear(double tau, double bound, NoiseLaw noise = NoiseLaw::Gaussian);
  static Labeler sign_smooth(double tau, double scale, NoiseLaw noise = NoiseLaw::Gaussian);

  LabelKind kind() const { return kind_; }
  double tau() const { return tau_; }
  double bound() const { return bound_; }
  double scale() const { return scale_; }
  NoiseLaw noise_law() const { return noise_; }

  double eta(double v, double eps) const;
  Vector sample_noise(Index n, std::uint64_t seed) const;
  /// Lipschitz modulus of eta in (v, eps) jointly.
  double lipschitz_modulus() const;

 private:
  Labeler(LabelKind kind, double tau, double bound, double scale, NoiseLaw noise)
      : kind_(kind), tau_(tau), bound_(bound), scale_(scale), noise_(noise) {}
  LabelKind kind_;
  double tau_;
  double bound_;
  double scale_;
  NoiseLaw noise_;
};

enum class ConstraintKind { Unconstrained, L2Ball, NtOperatorBall, LinfBall };

/// Symmetric convex set C_p applied column-wise to Theta (C_p^k).
///
/// - l2-ball: ||theta||_2 <= R
/// - nt-operator-ball: ||T_theta||_op <= R / sqrt(d), T_theta the d x m reshape
/// - linf-ball: |theta_j| <= R / sqrt(p)
class ConstraintSet {
 public:
  static ConstraintSet unconstrained() { return ConstraintSet(ConstraintKind::Unconstrained, 0, 0, 0); }
  static ConstraintSet l2_ball(double radius);
  static ConstraintSet nt_operator_ball(double radius, Index d, Index m);
  static ConstraintSet linf_ball(double radius);

  ConstraintKind kind() const { return kind_; }
  double radius() const { return radius_; }
  Index nt_d() const { return d_; }
  Index nt_m() const { return m_; }

  Vector project(const Vector& theta) const;
  Matrix project(const Matrix& theta) const;
  bool contains(const Vector& theta, double tol = 1e-10) const;
  bool contains(const Matrix& theta, double tol = 1e-10) const;

  /// sup ||theta||_2 over the set (infinity when unconstrained).
  double l2_diameter_bound(Index p) const;

 private:
  ConstraintSet(ConstraintKind kind, double radius, Index d, Index m)
      : kind_(kind), radius_(radius), d_(d), m_(m) {}
  ConstraintKind kind_;
  double radius_;
  Index d_;
  Index m_;
};

enum class RegularizerKind { None, Ridge };

/// r(Theta) = lambda ||Theta||_F^2 (ridge) or 0.
class Regularizer {
 public:
  static Regularizer none() { return Regularizer(RegularizerKind::None, 0.0); }
  static Regularizer ridge(double lambda);

  RegularizerKind kind() const { return kind_; }
  double lambda() const { return lambda_; }
  double strong_convexity() const { return kind_ == RegularizerKind::Ridge ? 2.0 * lambda_ : 0.0; }

  double value(const Matrix& theta) const;
  void add_gradient(const Matrix& theta, Matrix& grad) const;

 private:
  Regularizer(RegularizerKind kind, double lambda) : kind_(kind), lambda_(lambda) {}
  RegularizerKind kind_;
  double lambda_;
};

/// Loss l(u; y) = L(F(u), y) with F(u) = mean_j u_j over the k heads,
/// labels y = eta(sum_j (Theta*^T x)_j, eps), parameters Theta in C_p^k.
struct ErmProblem {
  Loss loss = Loss::huber();
  Labeler labeler = Labeler::linear(0.0);
  Matrix theta_star;  ///< p x k*
  Regularizer regularizer = Regularizer::none();
  ConstraintSet constraint = ConstraintSet::unconstrained();
  Index k = 1;

  Index dim() const { return theta_star.rows(); }
  /// Convex in Theta for every supported loss (the head F is linear).
  bool is_convex() const { return true; }
};

/// y_i = eta(Theta*^T x_i, eps_i) with eps drawn from the labeler's noise law.
Vector generate_labels(const ErmProblem& problem, const Matrix& X, std::uint64_t seed);
/// Same, with an explicit noise vector (shared across coupled arms).
Vector labels_from_noise(const ErmProblem& problem, const Matrix& X, const Vector& eps);

/// (1/n) sum_i l(Theta^T x_i; y_i) + r(Theta).
double train_risk(const ErmProblem& problem, const Matrix& theta, const Matrix& X, const Vector& y);

/// Differentiable objective over p x k parameter matrices.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual double value(const Matrix& theta) const = 0;
  /// Returns the value and writes the gradient (same shape as theta).
  virtual double value_and_gradient(const Matrix& theta, Matrix& grad) const = 0;
};

/// Regularized empirical risk on fixed data. Holds references; the data must
/// outlive it.
class EmpiricalRisk final : public Objective {
 public:
  EmpiricalRisk(const ErmProblem& problem, const Matrix& X, const Vector& y,
                bool include_regularizer = true);
  double value(const Matrix& theta) const override;
  double value_and_gradient(const Matrix& theta, Matrix& grad) const override;

 private:
  const ErmProblem& problem_;
  const Matrix& X_;
  const Vector& y_;
  bool with_reg_;
};

/// Monte Carlo risk estimate with its standard error.
struct RiskEstimate {
  double value = 0.0;
  double se = 0.0;
};

/// Mean loss over a fixed sample with the jackknife standard error (for a
/// sample mean the jackknife SE reduces to sd / sqrt(n)).
RiskEstimate mean_loss(const ErmProblem& problem, const Matrix& theta, const Matrix& X,
                       const Vector& y);

/// Produces n fresh feature rows from a seed (feature model or Gaussian equivalent).
using FeatureSource = std::function<Matrix(Index n, std::uint64_t seed)>;

/// E[l(Theta^T x; eta(Theta*^T x, eps))] estimated from n_test fresh draws of
/// the source and of the label noise.
RiskEstimate test_risk(const ErmProblem& problem, const Matrix& theta, const FeatureSource& source,
                       Index n_test, std::uint64_t seed);

Matrix project_constraint(const ConstraintSet& set, const Matrix& theta);

std::string to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);
std::string to_string(LabelKind kind);
LabelKind parse_label_kind(std::string_view name);
std::string to_string(NoiseLaw law);
NoiseLaw parse_noise_law(std::string_view name);
std::string to_string(ConstraintKind kind);
ConstraintKind parse_constraint_kind(std::string_view name);

}  // namespace ermu
