#pragma once

#include "ermu/activation.hpp"
#include "ermu/types.hpp"

#include <cstdint>
#include <string>
#include <string_view>

namespace ermu {

enum class FeatureFamily { RandomFeatures, NeuralTangent, LinearIndependent };

enum class EntryLaw { Rademacher, Uniform, Laplace, Gaussian };

std::string to_string(FeatureFamily family);
FeatureFamily parse_feature_family(std::string_view name);
std::string to_string(EntryLaw law);
EntryLaw parse_entry_law(std::string_view name);

struct FeatureDims {
  Index d = 0;  ///< covariate dimension (RF/NT); equals p for the linear family
  Index p = 0;  ///< feature dimension
  Index m = 0;  ///< NT hidden width; p = m * d
};

/// i.i.d. N(0, I_d) covariates with the seed that produced them.
struct CovariateBatch {
  Matrix Z;
  std::uint64_t seed = 0;

  static CovariateBatch gaussian(Index n, Index d, std::uint64_t seed);
};

/// d x count matrix whose columns are uniform on the unit sphere S^{d-1}.
Matrix sample_sphere_weights(Index d, Index count, std::uint64_t seed);

/// n x p matrix of i.i.d. zero-mean unit-variance entries from `law`.
Matrix sample_linear_covariates(Index p, Index n, EntryLaw law, std::uint64_t seed);

/// Frozen description of one feature family. Immutable once built, so a
/// single instance can be shared by concurrent trial workers.
class FeatureModel {
 public:
  /// x = sigma(W^T z); W is d x p with unit columns.
  static FeatureModel random_features(Matrix W, Activation activation);

  /// x = (z sigma'(w_1^T z), ..., z sigma'(w_m^T z)); W is d x m with unit
  /// columns, p = m d, block j occupies coordinates [j d, (j+1) d).
  static FeatureModel neural_tangent(Matrix W, Activation activation);

  /// x = Sigma^{1/2} xbar with xbar i.i.d. entries of variance nu.
  static FeatureModel linear_independent(Matrix sigma_half, double nu, EntryLaw law,
                                         double op_norm_bound);

  FeatureFamily family() const { return family_; }
  const FeatureDims& dims() const { return dims_; }
  const Matrix& weights() const { return W_; }
  const Matrix& sigma_half() const { return sigma_half_; }
  const Activation& activation() const { return activation_; }
  double nu() const { return nu_; }
  EntryLaw entry_law() const { return law_; }

  /// Column count expected from the raw inputs passed to featurize():
  /// d for RF/NT, p for the linear family (rows are xbar).
  Index input_dim() const;

  /// Row i of the result is phi(row i of Z). Throws InvalidArgument on a
  /// column-count mismatch.
  Matrix featurize(const Matrix& Z) const;
  Matrix featurize(const CovariateBatch& batch) const { return featurize(batch.Z); }

  /// Draws fresh raw inputs (Gaussian covariates or xbar rows) and featurizes.
  Matrix sample_features(Index n, std::uint64_t seed) const;

 private:
  FeatureModel(FeatureFamily family, Matrix W, Matrix sigma_half, Activation activation,
               FeatureDims dims, double nu, EntryLaw law);

  FeatureFamily family_;
  Matrix W_;
  Matrix sigma_half_;
  Activation activation_;
  FeatureDims dims_;
  double nu_ = 1.0;
  EntryLaw law_ = EntryLaw::Rademacher;
};

/// Sigma^{1/2} for Sigma_ij = rho^{|i-j|} (AR(1)); rho = 0 gives the identity.
Matrix ar1_sigma_half(Index p, double rho);

/// Reshapes an NT parameter vector of length m d into T_theta (d x m), column j
/// holding block j.
Matrix nt_block_matrix(const Vector& theta, Index d, Index m);

}  // namespace ermu
