#include "ermu/erm_problem.hpp"

#include "ermu/rng.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace ermu {

// ---------------------------------------------------------------------------
// Loss

Loss Loss::huber(double delta) {
  if (!(delta > 0.0)) throw InvalidArgument("huber: delta must be positive");
  return Loss(LossKind::Huber, delta);
}

Loss Loss::pseudo_huber(double delta) {
  if (!(delta > 0.0)) throw InvalidArgument("pseudo-huber: delta must be positive");
  return Loss(LossKind::PseudoHuber, delta);
}

double Loss::value(double yhat, double y) const {
  switch (kind_) {
    case LossKind::Logistic: {
      const double z = -y * yhat;  // log(1 + e^z)
      return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    }
    case LossKind::Huber: {
      const double r = std::abs(yhat - y);
      return r <= delta_ ? 0.5 * r * r : delta_ * (r - 0.5 * delta_);
    }
    case LossKind::Squared: {
      const double r = yhat - y;
      return r * r;
    }
    case LossKind::PseudoHuber: {
      const double q = (yhat - y) / delta_;
      return delta_ * delta_ * (std::sqrt(1.0 + q * q) - 1.0);
    }
  }
  return 0.0;
}

double Loss::derivative(double yhat, double y) const {
  switch (kind_) {
    case LossKind::Logistic: {
      const double z = -y * yhat;
      const double sig = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
      return -y * sig;
    }
    case LossKind::Huber: return std::clamp(yhat - y, -delta_, delta_);
    case LossKind::Squared: return 2.0 * (yhat - y);
    case LossKind::PseudoHuber: {
      const double r = yhat - y;
      const double q = r / delta_;
      return r / std::sqrt(1.0 + q * q);
    }
  }
  return 0.0;
}

double Loss::lipschitz_constant() const {
  switch (kind_) {
    case LossKind::Logistic: return 1.0;  // |y| <= 1 labels; otherwise scales with |y|
    case LossKind::Huber:
    case LossKind::PseudoHuber: return delta_;
    case LossKind::Squared: return std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Labeler

Labeler Labeler::linear(double tau, NoiseLaw noise) {
  if (!(tau >= 0.0)) throw InvalidArgument("labeler: tau must be >= 0");
  return Labeler(LabelKind::Linear, tau, 0.0, 1.0, noise);
}

Labeler Labeler::clipped_linear(double tau, double bound, NoiseLaw noise) {
  if (!(tau >= 0.0) || !(bound > 0.0)) throw InvalidArgument("clipped-linear: tau >= 0 and bound > 0 required");
  return Labeler(LabelKind::ClippedLinear, tau, bound, 1.0, noise);
}

Labeler Labeler::sign_smooth(double tau, double scale, NoiseLaw noise) {
  if (!(tau >= 0.0) || !(scale > 0.0)) throw InvalidArgument("sign-smooth: tau >= 0 and scale > 0 required");
  return Labeler(LabelKind::SignSmooth, tau, 0.0, scale, noise);
}

double Labeler::eta(double v, double eps) const {
  switch (kind_) {
    case LabelKind::Linear: return v + tau_ * eps;
    case LabelKind::ClippedLinear: return std::clamp(v, -bound_, bound_) + tau_ * eps;
    case LabelKind::SignSmooth: return std::tanh(v / scale_) + tau_ * eps;
  }
  return 0.0;
}

Vector Labeler::sample_noise(Index n, std::uint64_t seed) const {
  if (noise_ == NoiseLaw::Gaussian) return standard_normal(n, seed);
  Rng rng(seed);
  std::bernoulli_distribution coin(0.5);
  Vector eps(n);
  for (Index i = 0; i < n; ++i) eps(i) = coin(rng) ? 1.0 : -1.0;
  return eps;
}

double Labeler::lipschitz_modulus() const {
  const double dv = kind_ == LabelKind::SignSmooth ? 1.0 / scale_ : 1.0;
  return std::sqrt(dv * dv + tau_ * tau_);
}

// ---------------------------------------------------------------------------
// Constraint sets

ConstraintSet ConstraintSet::l2_ball(double radius) {
  if (!(radius >= 0.0)) throw InvalidArgument("l2-ball: radius must be >= 0");
  return ConstraintSet(ConstraintKind::L2Ball, radius, 0, 0);
}

ConstraintSet ConstraintSet::nt_operator_ball(double radius, Index d, Index m) {
  if (!(radius >= 0.0) || d < 1 || m < 1) throw InvalidArgument("nt-operator-ball: bad parameters");
  return ConstraintSet(ConstraintKind::NtOperatorBall, radius, d, m);
}

ConstraintSet ConstraintSet::linf_ball(double radius) {
  if (!(radius >= 0.0)) throw InvalidArgument("linf-ball: radius must be >= 0");
  return ConstraintSet(ConstraintKind::LinfBall, radius, 0, 0);
}

Vector ConstraintSet::project(const Vector& theta) const {
  switch (kind_) {
    case ConstraintKind::Unconstrained: return theta;
    case ConstraintKind::L2Ball: {
      const double norm = theta.norm();
      if (norm <= radius_) return theta;
      return theta * (radius_ / norm);
    }
    case ConstraintKind::LinfBall: {
      const double b = radius_ / std::sqrt(static_cast<double>(theta.size()));
      return theta.cwiseMax(-b).cwiseMin(b);
    }
    case ConstraintKind::NtOperatorBall: {
      if (theta.size() != d_ * m_) throw InvalidArgument("nt-operator-ball: parameter length is not d*m");
      const double b = radius_ / std::sqrt(static_cast<double>(d_));
      Eigen::Map<const Matrix> T(theta.data(), d_, m_);
      Eigen::JacobiSVD<Matrix> svd(T, Eigen::ComputeThinU | Eigen::ComputeThinV);
      const Vector& s = svd.singularValues();
      if (s.size() == 0 || s(0) <= b) return theta;
      const Matrix clipped = svd.matrixU() * s.cwiseMin(b).asDiagonal() * svd.matrixV().transpose();
      return Eigen::Map<const Vector>(clipped.data(), clipped.size());
    }
  }
  return theta;
}

Matrix ConstraintSet::project(const Matrix& theta) const {
  Matrix out(theta.rows(), theta.cols());
  for (Index j = 0; j < theta.cols(); ++j) out.col(j) = project(Vector(theta.col(j)));
  return out;
}

bool ConstraintSet::contains(const Vector& theta, double tol) const {
  switch (kind_) {
    case ConstraintKind::Unconstrained: return true;
    case ConstraintKind::L2Ball: return theta.norm() <= radius_ + tol;
    case ConstraintKind::LinfBall:
      return theta.size() == 0 ||
             theta.cwiseAbs().maxCoeff() <= radius_ / std::sqrt(static_cast<double>(theta.size())) + tol;
    case ConstraintKind::NtOperatorBall: {
      if (theta.size() != d_ * m_) return false;
      Eigen::Map<const Matrix> T(theta.data(), d_, m_);
      Eigen::JacobiSVD<Matrix> svd(T);
      return svd.singularValues()(0) <= radius_ / std::sqrt(static_cast<double>(d_)) + tol;
    }
  }
  return false;
}

bool ConstraintSet::contains(const Matrix& theta, double tol) const {
  for (Index j = 0; j < theta.cols(); ++j)
    if (!contains(Vector(theta.col(j)), tol)) return false;
  return true;
}

double ConstraintSet::l2_diameter_bound(Index p) const {
  (void)p;
  switch (kind_) {
    case ConstraintKind::Unconstrained: return std::numeric_limits<double>::infinity();
    case ConstraintKind::L2Ball:
    case ConstraintKind::LinfBall: return radius_;
    case ConstraintKind::NtOperatorBall:
      return std::sqrt(static_cast<double>(std::min(d_, m_))) * radius_ / std::sqrt(static_cast<double>(d_));
  }
  return 0.0;
}

Matrix project_constraint(const ConstraintSet& set, const Matrix& theta) { return set.project(theta); }

// ---------------------------------------------------------------------------
// Regularizer

Regularizer Regularizer::ridge(double lambda) {
  if (!(lambda >= 0.0)) throw InvalidArgument("ridge: lambda must be >= 0");
  return Regularizer(RegularizerKind::Ridge, lambda);
}

double Regularizer::value(const Matrix& theta) const {
  return kind_ == RegularizerKind::Ridge ? lambda_ * theta.squaredNorm() : 0.0;
}

void Regularizer::add_gradient(const Matrix& theta, Matrix& grad) const {
  if (kind_ == RegularizerKind::Ridge) grad.noalias() += (2.0 * lambda_) * theta;
}

// ---------------------------------------------------------------------------
// Risks

namespace {

void check_data(const ErmProblem& problem, const Matrix& X, const Vector& y) {
  if (X.rows() == 0) throw InvalidArgument("empty data set (n = 0)");
  if (X.rows() != y.size()) throw InvalidArgument("X rows and y length differ");
  if (problem.theta_star.size() > 0 && X.cols() != problem.theta_star.rows())
    throw InvalidArgument("X columns do not match the problem dimension");
}

// yhat_i = mean_j (X Theta)_ij
Vector predictions(const Matrix& theta, const Matrix& X) {
  if (X.cols() != theta.rows()) throw InvalidArgument("Theta rows do not match X columns");
  if (theta.cols() == 1) return X * theta.col(0);
  return (X * theta).rowwise().mean();
}

}  // namespace

Vector labels_from_noise(const ErmProblem& problem, const Matrix& X, const Vector& eps) {
  if (X.cols() != problem.theta_star.rows())
    throw InvalidArgument("generate_labels: X has " + std::to_string(X.cols()) + " columns, Theta* has " +
                          std::to_string(problem.theta_star.rows()) + " rows");
  if (eps.size() != X.rows()) throw InvalidArgument("generate_labels: noise length differs from n");
  const Vector v = (X * problem.theta_star).rowwise().sum();
  Vector y(X.rows());
  for (Index i = 0; i < X.rows(); ++i) y(i) = problem.labeler.eta(v(i), eps(i));
  return y;
}

Vector generate_labels(const ErmProblem& problem, const Matrix& X, std::uint64_t seed) {
  return labels_from_noise(problem, X, problem.labeler.sample_noise(X.rows(), seed));
}

EmpiricalRisk::EmpiricalRisk(const ErmProblem& problem, const Matrix& X, const Vector& y,
                             bool include_regularizer)
    : problem_(problem), X_(X), y_(y), with_reg_(include_regularizer) {
  check_data(problem, X, y);
}

double EmpiricalRisk::value(const Matrix& theta) const {
  const Vector yhat = predictions(theta, X_);
  double acc = 0.0;
  for (Index i = 0; i < yhat.size(); ++i) acc += problem_.loss.value(yhat(i), y_(i));
  acc /= static_cast<double>(yhat.size());
  return with_reg_ ? acc + problem_.regularizer.value(theta) : acc;
}

double EmpiricalRisk::value_and_gradient(const Matrix& theta, Matrix& grad) const {
  const Vector yhat = predictions(theta, X_);
  const double inv_n = 1.0 / static_cast<double>(yhat.size());
  Vector dl(yhat.size());
  double acc = 0.0;
  for (Index i = 0; i < yhat.size(); ++i) {
    acc += problem_.loss.value(yhat(i), y_(i));
    dl(i) = problem_.loss.derivative(yhat(i), y_(i)) * inv_n;
  }
  acc *= inv_n;
  const Vector g = X_.transpose() * dl;
  grad.resize(theta.rows(), theta.cols());
  const double per_head = 1.0 / static_cast<double>(theta.cols());
  for (Index j = 0; j < theta.cols(); ++j) grad.col(j) = per_head * g;
  if (with_reg_) {
    problem_.regularizer.add_gradient(theta, grad);
    acc += problem_.regularizer.value(theta);
  }
  return acc;
}

double train_risk(const ErmProblem& problem, const Matrix& theta, const Matrix& X, const Vector& y) {
  return EmpiricalRisk(problem, X, y).value(theta);
}

RiskEstimate mean_loss(const ErmProblem& problem, const Matrix& theta, const Matrix& X,
                       const Vector& y) {
  check_data(problem, X, y);
  const Vector yhat = predictions(theta, X);
  const Index n = yhat.size();
  Vector losses(n);
  for (Index i = 0; i < n; ++i) losses(i) = problem.loss.value(yhat(i), y(i));
  RiskEstimate est;
  est.value = losses.mean();
  if (n > 1) {
    const double ss = (losses.array() - est.value).square().sum();
    est.se = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
  }
  return est;
}

RiskEstimate test_risk(const ErmProblem& problem, const Matrix& theta, const FeatureSource& source,
                       Index n_test, std::uint64_t seed) {
  if (n_test < 1) throw InvalidArgument("test_risk: n_test must be >= 1");
  const Matrix X = source(n_test, derive_seed(seed, {1}));
  const Vector y = generate_labels(problem, X, derive_seed(seed, {2}));
  return mean_loss(problem, theta, X, y);
}

// ---------------------------------------------------------------------------
// Names

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::Logistic: return "logistic";
    case LossKind::Huber: return "huber";
    case LossKind::Squared: return "squared";
    case LossKind::PseudoHuber: return "pseudo-huber";
  }
  return "?";
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "logistic") return LossKind::Logistic;
  if (name == "huber") return LossKind::Huber;
  if (name == "squared") return LossKind::Squared;
  if (name == "pseudo-huber") return LossKind::PseudoHuber;
  throw InvalidArgument("unknown loss '" + std::string(name) + "'");
}

std::string to_string(LabelKind kind) {
  switch (kind) {
    case LabelKind::Linear: return "linear";
    case LabelKind::ClippedLinear: return "clipped-linear";
    case LabelKind::SignSmooth: return "sign-smooth";
  }
  return "?";
}

LabelKind parse_label_kind(std::string_view name) {
  if (name == "linear") return LabelKind::Linear;
  if (name == "clipped-linear") return LabelKind::ClippedLinear;
  if (name == "sign-smooth") return LabelKind::SignSmooth;
  throw InvalidArgument("unknown labeler '" + std::string(name) + "'");
}

std::string to_string(NoiseLaw law) { return law == NoiseLaw::Gaussian ? "gaussian" : "rademacher"; }

NoiseLaw parse_noise_law(std::string_view name) {
  if (name == "gaussian") return NoiseLaw::Gaussian;
  if (name == "rademacher") return NoiseLaw::Rademacher;
  throw InvalidArgument("unknown noise law '" + std::string(name) + "'");
}

std::string to_string(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::Unconstrained: return "none";
    case ConstraintKind::L2Ball: return "l2-ball";
    case ConstraintKind::NtOperatorBall: return "nt-operator-ball";
    case ConstraintKind::LinfBall: return "linf-ball";
  }
  return "?";
}

ConstraintKind parse_constraint_kind(std::string_view name) {
  if (name == "none") return ConstraintKind::Unconstrained;
  if (name == "l2-ball") return ConstraintKind::L2Ball;
  if (name == "nt-operator-ball") return ConstraintKind::NtOperatorBall;
  if (name == "linf-ball") return ConstraintKind::LinfBall;
  throw InvalidArgument("unknown constraint '" + std::string(name) + "'");
}

}  // namespace ermu
