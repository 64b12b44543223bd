#include "ermu/feature_models.hpp"

#include "ermu/rng.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>

namespace ermu {

namespace {

void require_unit_columns(const Matrix& W, const char* who) {
  for (Index j = 0; j < W.cols(); ++j) {
    if (std::abs(W.col(j).norm() - 1.0) > 1e-8)
      throw InvalidArgument(std::string(who) + ": weight column " + std::to_string(j) +
                            " is not unit norm");
  }
}

}  // namespace

std::string to_string(FeatureFamily family) {
  switch (family) {
    case FeatureFamily::RandomFeatures: return "random-features";
    case FeatureFamily::NeuralTangent: return "neural-tangent";
    case FeatureFamily::LinearIndependent: return "linear-independent";
  }
  return "?";
}

FeatureFamily parse_feature_family(std::string_view name) {
  if (name == "random-features") return FeatureFamily::RandomFeatures;
  if (name == "neural-tangent") return FeatureFamily::NeuralTangent;
  if (name == "linear-independent") return FeatureFamily::LinearIndependent;
  throw InvalidArgument("unknown feature family '" + std::string(name) + "'");
}

std::string to_string(EntryLaw law) {
  switch (law) {
    case EntryLaw::Rademacher: return "rademacher";
    case EntryLaw::Uniform: return "uniform";
    case EntryLaw::Laplace: return "laplace";
    case EntryLaw::Gaussian: return "gaussian";
  }
  return "?";
}

EntryLaw parse_entry_law(std::string_view name) {
  if (name == "rademacher") return EntryLaw::Rademacher;
  if (name == "uniform") return EntryLaw::Uniform;
  if (name == "laplace") return EntryLaw::Laplace;
  if (name == "gaussian") return EntryLaw::Gaussian;
  throw InvalidArgument("unknown entry law '" + std::string(name) + "'");
}

CovariateBatch CovariateBatch::gaussian(Index n, Index d, std::uint64_t seed) {
  return CovariateBatch{standard_normal(n, d, seed), seed};
}

Matrix sample_sphere_weights(Index d, Index count, std::uint64_t seed) {
  if (d < 1 || count < 1) throw InvalidArgument("sample_sphere_weights: dimensions must be >= 1");
  // One row of draws per column keeps earlier columns independent of count.
  Matrix W = standard_normal(count, d, seed).transpose();
  for (Index j = 0; j < count; ++j) {
    double norm = W.col(j).norm();
    while (norm == 0.0) {  // measure zero, but d = 1 makes it cheap to guard
      W.col(j) = standard_normal(d, derive_seed(seed, {static_cast<std::uint64_t>(j), 0xdeadULL}));
      norm = W.col(j).norm();
    }
    W.col(j) /= norm;
  }
  return W;
}

Matrix sample_linear_covariates(Index p, Index n, EntryLaw law, std::uint64_t seed) {
  if (p < 1 || n < 0) throw InvalidArgument("sample_linear_covariates: bad dimensions");
  if (law == EntryLaw::Gaussian) return standard_normal(n, p, seed);

  Rng rng(seed);
  Matrix out(n, p);
  switch (law) {
    case EntryLaw::Rademacher: {
      std::bernoulli_distribution coin(0.5);
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < p; ++j) out(i, j) = coin(rng) ? 1.0 : -1.0;
      break;
    }
    case EntryLaw::Uniform: {
      const double a = std::sqrt(3.0);
      std::uniform_real_distribution<double> u(-a, a);
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < p; ++j) out(i, j) = u(rng);
      break;
    }
    case EntryLaw::Laplace: {
      // Var Laplace(b) = 2 b^2, so b = 1/sqrt(2).
      const double b = 1.0 / std::sqrt(2.0);
      std::exponential_distribution<double> expo(1.0);
      std::bernoulli_distribution coin(0.5);
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < p; ++j) {
          const double mag = b * expo(rng);
          out(i, j) = coin(rng) ? mag : -mag;
        }
      break;
    }
    case EntryLaw::Gaussian: break;
  }
  return out;
}

FeatureModel::FeatureModel(FeatureFamily family, Matrix W, Matrix sigma_half, Activation activation,
                           FeatureDims dims, double nu, EntryLaw law)
    : family_(family),
      W_(std::move(W)),
      sigma_half_(std::move(sigma_half)),
      activation_(std::move(activation)),
      dims_(dims),
      nu_(nu),
      law_(law) {}

FeatureModel FeatureModel::random_features(Matrix W, Activation activation) {
  require_unit_columns(W, "random_features");
  FeatureDims dims{W.rows(), W.cols(), 0};
  return FeatureModel(FeatureFamily::RandomFeatures, std::move(W), Matrix(), std::move(activation),
                      dims, 1.0, EntryLaw::Gaussian);
}

FeatureModel FeatureModel::neural_tangent(Matrix W, Activation activation) {
  require_unit_columns(W, "neural_tangent");
  FeatureDims dims{W.rows(), W.rows() * W.cols(), W.cols()};
  return FeatureModel(FeatureFamily::NeuralTangent, std::move(W), Matrix(), std::move(activation),
                      dims, 1.0, EntryLaw::Gaussian);
}

FeatureModel FeatureModel::linear_independent(Matrix sigma_half, double nu, EntryLaw law,
                                              double op_norm_bound) {
  if (sigma_half.rows() != sigma_half.cols() || sigma_half.rows() < 1)
    throw InvalidArgument("linear_independent: Sigma^{1/2} must be square and non-empty");
  if (!(nu > 0.0)) throw InvalidArgument("linear_independent: nu must be positive");
  Eigen::BDCSVD<Matrix> svd(sigma_half);
  const double op = svd.singularValues()(0);
  if (op > op_norm_bound * (1.0 + 1e-12))
    throw InvalidArgument("linear_independent: ||Sigma^{1/2}||_op = " + std::to_string(op) +
                          " exceeds bound " + std::to_string(op_norm_bound));
  FeatureDims dims{sigma_half.rows(), sigma_half.rows(), 0};
  return FeatureModel(FeatureFamily::LinearIndependent, Matrix(), std::move(sigma_half),
                      Activation::tanh_rf(), dims, nu, law);
}

Index FeatureModel::input_dim() const {
  return family_ == FeatureFamily::LinearIndependent ? dims_.p : dims_.d;
}

Matrix FeatureModel::featurize(const Matrix& Z) const {
  if (Z.cols() != input_dim())
    throw InvalidArgument("featurize: input has " + std::to_string(Z.cols()) + " columns, model expects " +
                          std::to_string(input_dim()));
  switch (family_) {
    case FeatureFamily::RandomFeatures: {
      Matrix A = Z * W_;
      activation_.apply(A);
      return A;
    }
    case FeatureFamily::NeuralTangent: {
      Matrix S = Z * W_;
      activation_.apply_derivative(S);
      const Index d = dims_.d;
      Matrix out(Z.rows(), dims_.p);
      for (Index j = 0; j < dims_.m; ++j)
        out.middleCols(j * d, d) = (Z.array().colwise() * S.col(j).array()).matrix();
      return out;
    }
    case FeatureFamily::LinearIndependent: return Z * sigma_half_.transpose();
  }
  return {};
}

Matrix FeatureModel::sample_features(Index n, std::uint64_t seed) const {
  if (family_ == FeatureFamily::LinearIndependent) {
    Matrix xbar = sample_linear_covariates(dims_.p, n, law_, seed);
    if (nu_ != 1.0) xbar *= std::sqrt(nu_);
    return featurize(xbar);
  }
  return featurize(standard_normal(n, dims_.d, seed));
}

Matrix ar1_sigma_half(Index p, double rho) {
  if (p < 1) throw InvalidArgument("ar1_sigma_half: p must be >= 1");
  if (!(std::abs(rho) < 1.0)) throw InvalidArgument("ar1_sigma_half: |rho| must be < 1");
  if (rho == 0.0) return Matrix::Identity(p, p);
  Matrix sigma(p, p);
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < p; ++j) sigma(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma);
  const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

Matrix nt_block_matrix(const Vector& theta, Index d, Index m) {
  if (theta.size() != d * m) throw InvalidArgument("nt_block_matrix: length is not d*m");
  return Eigen::Map<const Matrix>(theta.data(), d, m);
}

}  // namespace ermu
