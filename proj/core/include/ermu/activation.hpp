#pragma once

#include "ermu/types.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace ermu {

enum class ActivationKind { TanhRf, ShiftedSineNt, CustomHermite };

/// Scalar nonlinearity used by the random-features and neural-tangent maps.
///
/// - tanh-rf: sigma(t) = tanh(t). Odd, so E sigma(G) = 0.
/// - shifted-sine-nt: sigma(t) = sin(t) - e^{-1/2} t, with
///   sigma'(t) = cos(t) - e^{-1/2}. Both E sigma'(G) and E G sigma'(G) vanish.
/// - custom-hermite: sigma(t) = sum_k c_k h_k(t) in the orthonormal Hermite
///   basis, which gives closed-form feature covariances.
class Activation {
 public:
  static Activation tanh_rf();
  static Activation shifted_sine_nt();
  static Activation custom_hermite(std::vector<double> coeffs);

  ActivationKind kind() const { return kind_; }
  const std::vector<double>& hermite_coeffs() const { return coeffs_; }

  double value(double t) const;
  double derivative(double t) const;

  /// In-place elementwise sigma / sigma'.
  void apply(Matrix& a) const;
  void apply_derivative(Matrix& a) const;

  std::string name() const;

 private:
  Activation(ActivationKind kind, std::vector<double> coeffs)
      : kind_(kind), coeffs_(std::move(coeffs)) {}

  ActivationKind kind_;
  std::vector<double> coeffs_;
};

ActivationKind parse_activation_kind(std::string_view name);
std::string to_string(ActivationKind kind);

}  // namespace ermu
