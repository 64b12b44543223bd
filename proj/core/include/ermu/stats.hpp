#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace ermu {

double sample_mean(std::span<const double> x);
/// Unbiased (n-1) standard deviation; zero for fewer than two samples.
double sample_sd(std::span<const double> x);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return lo <= v && v <= hi; }
  double width() const { return hi - lo; }
};

struct BootstrapResult {
  double estimate = 0.0;
  double se = 0.0;  ///< sd of the bootstrap replicates
  Interval ci;
  bool degenerate = false;  ///< zero-width interval
};

/// Percentile bootstrap of the sample mean.
BootstrapResult bootstrap_mean(std::span<const double> x, int resamples, double level,
                               std::uint64_t seed);

/// Two-sample Kolmogorov–Smirnov statistic sup_t |F_a(t) - F_b(t)| via a
/// merge scan over the sorted samples. Ties are consumed together.
double ks_statistic(std::span<const double> a, std::span<const double> b);

/// Quantile of the two-sample KS statistic under the null, by simulation
/// (the statistic is distribution-free, so uniform draws suffice).
double ks_null_quantile(std::size_t na, std::size_t nb, double q, int reps, std::uint64_t seed);

/// A bounded Lipschitz test function with its recorded modulus.
struct PsiFunction {
  std::string name;
  std::function<double(double)> fn;
  double lipschitz = 0.0;
};

/// u_{delta,rho}: 0 below rho, (t - rho)/delta on [rho, rho + delta), 1 above.
PsiFunction ramp(double delta, double rho);
/// clamp(t - center, -c, c)
PsiFunction clipped_identity(double center, double c);
/// min((t - center)^2, c^2)
PsiFunction clipped_quadratic(double center, double c);

/// Ramps on the (delta, rho) grid, followed by clipped-identity and
/// clipped-quadratic at each (center, scale) pair given.
std::vector<PsiFunction> psi_dictionary(std::span<const double> deltas,
                                        std::span<const double> rhos, double center, double scale);

/// Ramps at rho on the 5%..95% pooled quantiles with delta in {0.5, 1, 2}
/// pooled sd, plus clipped functions around the pooled median.
std::vector<PsiFunction> default_psi_dictionary(std::span<const double> a,
                                                std::span<const double> b);

struct BlGapResult {
  std::vector<double> gaps;  ///< |mean psi(a) - mean psi(b)| per dictionary entry
  double max_gap = 0.0;
  std::size_t argmax = 0;
  BootstrapResult max_gap_bootstrap;
};

/// Throws InvalidArgument for empty samples or an empty dictionary.
BlGapResult bl_gap(std::span<const double> a, std::span<const double> b,
                   const std::vector<PsiFunction>& dictionary, int resamples, std::uint64_t seed);

}  // namespace ermu
