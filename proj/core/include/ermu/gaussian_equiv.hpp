#pragma once

#include "ermu/feature_models.hpp"
#include "ermu/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace ermu {

enum class CovarianceMode { HermiteExact, MonteCarlo, Empirical, LinearExact };

std::string to_string(CovarianceMode mode);
CovarianceMode parse_covariance_mode(std::string_view name);

struct CovarianceProvenance {
  CovarianceMode mode = CovarianceMode::MonteCarlo;
  Index samples = 0;         ///< n_cov for monte-carlo / empirical
  int hermite_order = 0;     ///< K for hermite-exact
  int quadrature_order = 0;  ///< Gauss–Hermite nodes used for coefficients
  double jitter = 0.0;       ///< absolute diagonal shift applied before factoring
  double clipped_mass = 0.0; ///< sum of |negative eigenvalues| removed
};

/// Factor L (p x p) with L L^T ~ Sigma_W, plus how it was obtained.
class GaussianEquivalent {
 public:
  GaussianEquivalent(Matrix factor, CovarianceProvenance provenance)
      : factor_(std::move(factor)), provenance_(provenance) {}

  const Matrix& factor() const { return factor_; }
  const CovarianceProvenance& provenance() const { return provenance_; }
  Index dim() const { return factor_.rows(); }
  Matrix covariance() const { return factor_ * factor_.transpose(); }

 private:
  Matrix factor_;
  CovarianceProvenance provenance_;
};

/// Sigma_ij = sum_{k=1..order} c_k^2 rho_ij^k with rho_ij = w_i^T w_j. The
/// constant coefficient is ignored (mean-zero activations).
Matrix rf_covariance_hermite(const Matrix& W, std::span<const double> coeffs, int order);

/// (1/n_cov) Phi^T Phi over a freshly featurized batch, accumulated in
/// fixed-size chunks with per-chunk seeds.
Matrix mc_covariance(const FeatureModel& model, Index n_cov, std::uint64_t seed);

/// Mean-centred sample covariance, 1/(n_cov - 1) normalisation.
Matrix empirical_covariance(const FeatureModel& model, Index n_cov, std::uint64_t seed);

struct CovarianceFactor {
  Matrix factor;
  double clipped_mass = 0.0;
  double jitter = 0.0;
};

/// Eigendecomposition with negative eigenvalues clipped to zero;
/// L = U diag(sqrt(lambda)). If jitter_rel > 0, jitter_rel * tr(cov) / p is
/// added to the diagonal first. Throws InvalidArgument when cov is not
/// symmetric to 1e-10 relative.
CovarianceFactor factor_covariance(const Matrix& cov, double jitter_rel);

/// Rows are L xi with xi ~ N(0, I_p).
Matrix sample_gaussian(const GaussianEquivalent& equiv, Index n, std::uint64_t seed);

struct EquivalentOptions {
  double n_cov_factor = 50.0;  ///< n_cov = n_cov_factor * p for sampled modes
  int hermite_order = 30;
  int quadrature_order = 150;
  double jitter_rel = 1e-10;
};

CovarianceMode default_covariance_mode(const FeatureModel& model);

/// Builds the equivalent for `model` in the requested mode.
///
/// hermite-exact is only available for random features. When the activation
/// is not itself a Hermite expansion its coefficients are projected by
/// quadrature up to `hermite_order`, and the diagonal is set to the exact
/// E sigma(G)^2 so the truncated tail does not bias the variances.
GaussianEquivalent build_equivalent(const FeatureModel& model, CovarianceMode mode,
                                    const EquivalentOptions& options, std::uint64_t seed);

}  // namespace ermu
