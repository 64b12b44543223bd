#include "ermu/gaussian_equiv.hpp"

#include "ermu/quadrature.hpp"
#include "ermu/rng.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <iostream>

namespace ermu {

namespace {

constexpr Index kCovarianceChunk = 2048;

Index chunk_count(Index n) { return (n + kCovarianceChunk - 1) / kCovarianceChunk; }

}  // namespace

std::string to_string(CovarianceMode mode) {
  switch (mode) {
    case CovarianceMode::HermiteExact: return "hermite-exact";
    case CovarianceMode::MonteCarlo: return "monte-carlo";
    case CovarianceMode::Empirical: return "empirical";
    case CovarianceMode::LinearExact: return "linear-exact";
  }
  return "?";
}

CovarianceMode parse_covariance_mode(std::string_view name) {
  if (name == "hermite-exact") return CovarianceMode::HermiteExact;
  if (name == "monte-carlo") return CovarianceMode::MonteCarlo;
  if (name == "empirical") return CovarianceMode::Empirical;
  if (name == "linear-exact") return CovarianceMode::LinearExact;
  throw InvalidArgument("unknown covariance mode '" + std::string(name) + "'");
}

Matrix rf_covariance_hermite(const Matrix& W, std::span<const double> coeffs, int order) {
  if (order < 1) throw InvalidArgument("rf_covariance_hermite: order must be >= 1");
  for (Index j = 0; j < W.cols(); ++j)
    if (std::abs(W.col(j).norm() - 1.0) > 1e-8)
      throw InvalidArgument("rf_covariance_hermite: column " + std::to_string(j) + " is not unit norm");

  Matrix rho = W.transpose() * W;
  rho.diagonal().setOnes();
  const int top = std::min<int>(order, static_cast<int>(coeffs.size()) - 1);
  Matrix cov = Matrix::Zero(rho.rows(), rho.cols());
  Matrix power = rho;
  for (int k = 1; k <= top; ++k) {
    if (k > 1) power.array() *= rho.array();
    cov.noalias() += (coeffs[k] * coeffs[k]) * power;
  }
  return cov;
}

Matrix mc_covariance(const FeatureModel& model, Index n_cov, std::uint64_t seed) {
  if (n_cov < 1) throw InvalidArgument("mc_covariance: n_cov must be >= 1");
  const Index p = model.dims().p;
  if (n_cov < p)
    std::clog << "warning: mc_covariance with n_cov = " << n_cov << " < p = " << p
              << " gives a rank-deficient estimate\n";
  Matrix acc = Matrix::Zero(p, p);
  const Index chunks = chunk_count(n_cov);
  for (Index c = 0; c < chunks; ++c) {
    const Index rows = std::min(kCovarianceChunk, n_cov - c * kCovarianceChunk);
    const Matrix phi = model.sample_features(rows, derive_seed(seed, {static_cast<std::uint64_t>(c)}));
    acc.selfadjointView<Eigen::Lower>().rankUpdate(phi.transpose());
  }
  acc.triangularView<Eigen::StrictlyUpper>() = acc.transpose();
  return acc / static_cast<double>(n_cov);
}

Matrix empirical_covariance(const FeatureModel& model, Index n_cov, std::uint64_t seed) {
  if (n_cov < 2) throw InvalidArgument("empirical_covariance: n_cov must be >= 2");
  const Index p = model.dims().p;
  Matrix acc = Matrix::Zero(p, p);
  Vector sum = Vector::Zero(p);
  const Index chunks = chunk_count(n_cov);
  for (Index c = 0; c < chunks; ++c) {
    const Index rows = std::min(kCovarianceChunk, n_cov - c * kCovarianceChunk);
    const Matrix phi = model.sample_features(rows, derive_seed(seed, {static_cast<std::uint64_t>(c)}));
    acc.selfadjointView<Eigen::Lower>().rankUpdate(phi.transpose());
    sum += phi.colwise().sum().transpose();
  }
  acc.triangularView<Eigen::StrictlyUpper>() = acc.transpose();
  const double n = static_cast<double>(n_cov);
  const Vector mean = sum / n;
  return (acc - n * mean * mean.transpose()) / (n - 1.0);
}

CovarianceFactor factor_covariance(const Matrix& cov, double jitter_rel) {
  if (cov.rows() != cov.cols()) throw InvalidArgument("factor_covariance: matrix is not square");
  const double scale = std::max(cov.norm(), 1e-300);
  if ((cov - cov.transpose()).norm() > 1e-10 * scale)
    throw InvalidArgument("factor_covariance: matrix is not symmetric");
  if (jitter_rel < 0.0) throw InvalidArgument("factor_covariance: negative jitter");

  const Index p = cov.rows();
  Matrix sym = 0.5 * (cov + cov.transpose());
  CovarianceFactor out;
  if (jitter_rel > 0.0 && p > 0) {
    out.jitter = jitter_rel * sym.trace() / static_cast<double>(p);
    sym.diagonal().array() += out.jitter;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) throw std::runtime_error("factor_covariance: eigensolver failed");
  Vector lambda = eig.eigenvalues();
  for (Index i = 0; i < p; ++i) {
    if (lambda(i) < 0.0) {
      out.clipped_mass += -lambda(i);
      lambda(i) = 0.0;
    }
  }
  out.factor = eig.eigenvectors() * lambda.cwiseSqrt().asDiagonal();
  return out;
}

Matrix sample_gaussian(const GaussianEquivalent& equiv, Index n, std::uint64_t seed) {
  const Matrix xi = standard_normal(n, equiv.dim(), seed);
  return xi * equiv.factor().transpose();
}

CovarianceMode default_covariance_mode(const FeatureModel& model) {
  switch (model.family()) {
    case FeatureFamily::LinearIndependent: return CovarianceMode::LinearExact;
    case FeatureFamily::RandomFeatures:
      return model.activation().kind() == ActivationKind::CustomHermite ? CovarianceMode::HermiteExact
                                                                        : CovarianceMode::MonteCarlo;
    case FeatureFamily::NeuralTangent: return CovarianceMode::MonteCarlo;
  }
  return CovarianceMode::MonteCarlo;
}

GaussianEquivalent build_equivalent(const FeatureModel& model, CovarianceMode mode,
                                    const EquivalentOptions& options, std::uint64_t seed) {
  CovarianceProvenance prov;
  prov.mode = mode;
  const Index p = model.dims().p;

  Matrix cov;
  switch (mode) {
    case CovarianceMode::LinearExact: {
      if (model.family() != FeatureFamily::LinearIndependent)
        throw InvalidArgument("linear-exact covariance needs the linear family");
      return GaussianEquivalent(std::sqrt(model.nu()) * model.sigma_half(), prov);
    }
    case CovarianceMode::HermiteExact: {
      if (model.family() != FeatureFamily::RandomFeatures)
        throw InvalidArgument("hermite-exact covariance needs the random-features family");
      const Activation& act = model.activation();
      if (act.kind() == ActivationKind::CustomHermite) {
        const auto& c = act.hermite_coeffs();
        prov.hermite_order = static_cast<int>(c.size()) - 1;
        cov = rf_covariance_hermite(model.weights(), c, std::max(1, prov.hermite_order));
      } else {
        const GaussHermiteRule rule = gauss_hermite(options.quadrature_order);
        auto sigma = [&act](double t) { return act.value(t); };
        const auto c = hermite_coefficients(sigma, options.hermite_order, rule);
        prov.hermite_order = options.hermite_order;
        prov.quadrature_order = options.quadrature_order;
        cov = rf_covariance_hermite(model.weights(), c, options.hermite_order);
        const double second_moment = gaussian_expectation([&](double t) { return sigma(t) * sigma(t); }, rule);
        cov.diagonal().setConstant(second_moment);
      }
      break;
    }
    case CovarianceMode::MonteCarlo:
    case CovarianceMode::Empirical: {
      const Index n_cov = static_cast<Index>(std::ceil(options.n_cov_factor * static_cast<double>(p)));
      prov.samples = n_cov;
      cov = mode == CovarianceMode::MonteCarlo ? mc_covariance(model, n_cov, seed)
                                               : empirical_covariance(model, n_cov, seed);
      break;
    }
  }
  CovarianceFactor f = factor_covariance(cov, options.jitter_rel);
  prov.jitter = f.jitter;
  prov.clipped_mass = f.clipped_mass;
  return GaussianEquivalent(std::move(f.factor), prov);
}

}  // namespace ermu
