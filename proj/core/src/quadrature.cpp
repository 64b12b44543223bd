#include "ermu/quadrature.hpp"

#include "ermu/types.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace ermu {

GaussHermiteRule gauss_hermite(int order) {
  if (order < 1) throw InvalidArgument("gauss_hermite: order must be >= 1");
  const Index n = order;
  Vector diag = Vector::Zero(n);
  Vector sub(std::max<Index>(n - 1, 0));
  for (Index k = 0; k + 1 < n; ++k) sub(k) = std::sqrt(static_cast<double>(k + 1));

  GaussHermiteRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  if (n == 1) {
    rule.nodes[0] = 0.0;
    rule.weights[0] = 1.0;
    return rule;
  }

  Eigen::SelfAdjointEigenSolver<Matrix> eig;
  eig.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (eig.info() != Eigen::Success) throw std::runtime_error("gauss_hermite: eigensolver failed");

  for (Index i = 0; i < n; ++i) {
    rule.nodes[i] = eig.eigenvalues()(i);
    const double v0 = eig.eigenvectors()(0, i);
    rule.weights[i] = v0 * v0;
  }
  // The rule is symmetric about zero; enforce it so odd moments vanish.
  for (Index i = 0; i < n / 2; ++i) {
    const Index j = n - 1 - i;
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -x;
    rule.nodes[j] = x;
    rule.weights[i] = w;
    rule.weights[j] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;

  double total = 0.0;
  for (double w : rule.weights) total += w;
  for (double& w : rule.weights) w /= total;
  return rule;
}

double gaussian_expectation(const std::function<double(double)>& f, const GaussHermiteRule& rule) {
  double acc = 0.0;
  for (int i = 0; i < rule.order(); ++i) acc += rule.weights[i] * f(rule.nodes[i]);
  return acc;
}

double bivariate_expectation(const std::function<double(double)>& f,
                             const std::function<double(double)>& g, double rho,
                             const GaussHermiteRule& rule) {
  if (!(rho >= -1.0 && rho <= 1.0)) throw InvalidArgument("bivariate_expectation: |rho| > 1");
  const double c = std::sqrt(std::max(0.0, 1.0 - rho * rho));
  double acc = 0.0;
  for (int i = 0; i < rule.order(); ++i) {
    const double u = rule.nodes[i];
    double inner = 0.0;
    for (int j = 0; j < rule.order(); ++j) inner += rule.weights[j] * g(rho * u + c * rule.nodes[j]);
    acc += rule.weights[i] * f(u) * inner;
  }
  return acc;
}

std::vector<double> normalized_hermite(int max_degree, double x) {
  std::vector<double> h(static_cast<std::size_t>(max_degree) + 1);
  h[0] = 1.0;
  if (max_degree >= 1) h[1] = x;
  for (int k = 1; k < max_degree; ++k)
    h[k + 1] = (x * h[k] - std::sqrt(static_cast<double>(k)) * h[k - 1]) /
               std::sqrt(static_cast<double>(k + 1));
  return h;
}

std::vector<double> hermite_coefficients(const std::function<double(double)>& f, int max_degree,
                                         const GaussHermiteRule& rule) {
  if (max_degree < 0) throw InvalidArgument("hermite_coefficients: negative degree");
  std::vector<double> c(static_cast<std::size_t>(max_degree) + 1, 0.0);
  for (int i = 0; i < rule.order(); ++i) {
    const double fx = f(rule.nodes[i]) * rule.weights[i];
    const auto h = normalized_hermite(max_degree, rule.nodes[i]);
    for (int k = 0; k <= max_degree; ++k) c[k] += fx * h[k];
  }
  return c;
}

}  // namespace ermu
