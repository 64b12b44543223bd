#pragma once

#include <functional>
#include <vector>

namespace ermu {

/// Gauss–Hermite rule for the standard normal weight: sum_i w_i f(x_i) ~ E f(G),
/// G ~ N(0,1). Nodes ascending, weights sum to one.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  int order() const { return static_cast<int>(nodes.size()); }
};

/// Golub–Welsch construction (eigenvalues of the Jacobi matrix of the
/// probabilists' Hermite recurrence).
GaussHermiteRule gauss_hermite(int order);

double gaussian_expectation(const std::function<double(double)>& f, const GaussHermiteRule& rule);

/// E[f(U) g(V)] for (U,V) standard bivariate normal with correlation rho,
/// using the tensor-product rule (order^2 evaluations).
double bivariate_expectation(const std::function<double(double)>& f,
                             const std::function<double(double)>& g, double rho,
                             const GaussHermiteRule& rule);

/// Orthonormal probabilists' Hermite polynomials h_0..h_K at x
/// (h_k = He_k / sqrt(k!)).
std::vector<double> normalized_hermite(int max_degree, double x);

/// Coefficients c_k = E[f(G) h_k(G)], k = 0..max_degree.
std::vector<double> hermite_coefficients(const std::function<double(double)>& f, int max_degree,
                                         const GaussHermiteRule& rule);

}  // namespace ermu
