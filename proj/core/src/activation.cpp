#include "ermu/activation.hpp"

#include "ermu/quadrature.hpp"

#include <cmath>

namespace ermu {

namespace {

const double kExpMinusHalf = std::exp(-0.5);

double hermite_series(const std::vector<double>& c, double t) {
  if (c.empty()) return 0.0;
  const auto h = normalized_hermite(static_cast<int>(c.size()) - 1, t);
  double acc = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) acc += c[k] * h[k];
  return acc;
}

// h_k' = sqrt(k) h_{k-1}
double hermite_series_derivative(const std::vector<double>& c, double t) {
  if (c.size() < 2) return 0.0;
  const auto h = normalized_hermite(static_cast<int>(c.size()) - 2, t);
  double acc = 0.0;
  for (std::size_t k = 1; k < c.size(); ++k) acc += c[k] * std::sqrt(static_cast<double>(k)) * h[k - 1];
  return acc;
}

}  // namespace

Activation Activation::tanh_rf() { return Activation(ActivationKind::TanhRf, {}); }

Activation Activation::shifted_sine_nt() { return Activation(ActivationKind::ShiftedSineNt, {}); }

Activation Activation::custom_hermite(std::vector<double> coeffs) {
  if (coeffs.empty()) throw InvalidArgument("custom-hermite activation needs at least one coefficient");
  for (double c : coeffs)
    if (!std::isfinite(c)) throw InvalidArgument("custom-hermite coefficient is not finite");
  return Activation(ActivationKind::CustomHermite, std::move(coeffs));
}

double Activation::value(double t) const {
  switch (kind_) {
    case ActivationKind::TanhRf: return std::tanh(t);
    case ActivationKind::ShiftedSineNt: return std::sin(t) - kExpMinusHalf * t;
    case ActivationKind::CustomHermite: return hermite_series(coeffs_, t);
  }
  return 0.0;
}

double Activation::derivative(double t) const {
  switch (kind_) {
    case ActivationKind::TanhRf: {
      const double th = std::tanh(t);
      return 1.0 - th * th;
    }
    case ActivationKind::ShiftedSineNt: return std::cos(t) - kExpMinusHalf;
    case ActivationKind::CustomHermite: return hermite_series_derivative(coeffs_, t);
  }
  return 0.0;
}

void Activation::apply(Matrix& a) const {
  switch (kind_) {
    case ActivationKind::TanhRf: a = a.array().tanh().matrix(); return;
    case ActivationKind::ShiftedSineNt: a = (a.array().sin() - kExpMinusHalf * a.array()).matrix(); return;
    case ActivationKind::CustomHermite: a = a.unaryExpr([this](double t) { return hermite_series(coeffs_, t); }); return;
  }
}

void Activation::apply_derivative(Matrix& a) const {
  switch (kind_) {
    case ActivationKind::TanhRf: a = (1.0 - a.array().tanh().square()).matrix(); return;
    case ActivationKind::ShiftedSineNt: a = (a.array().cos() - kExpMinusHalf).matrix(); return;
    case ActivationKind::CustomHermite:
      a = a.unaryExpr([this](double t) { return hermite_series_derivative(coeffs_, t); });
      return;
  }
}

std::string Activation::name() const { return to_string(kind_); }

ActivationKind parse_activation_kind(std::string_view name) {
  if (name == "tanh-rf") return ActivationKind::TanhRf;
  if (name == "shifted-sine-nt") return ActivationKind::ShiftedSineNt;
  if (name == "custom-hermite") return ActivationKind::CustomHermite;
  throw InvalidArgument("unknown activation '" + std::string(name) + "'");
}

std::string to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::TanhRf: return "tanh-rf";
    case ActivationKind::ShiftedSineNt: return "shifted-sine-nt";
    case ActivationKind::CustomHermite: return "custom-hermite";
  }
  return "?";
}

}  // namespace ermu
