#include "ermu/stats.hpp"

#include "ermu/rng.hpp"
#include "ermu/types.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <random>

namespace ermu {

double sample_mean(std::span<const double> x) {
  if (x.empty()) throw InvalidArgument("mean of an empty sample");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double sample_sd(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = sample_mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

namespace {

// Linear interpolation between order statistics (R type 7). `sorted` is non-empty.
double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

void check_level(double level) {
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("confidence level must lie in (0, 1)");
}

BootstrapResult summarize(double estimate, std::vector<double> reps, double level) {
  BootstrapResult out;
  out.estimate = estimate;
  out.se = sample_sd(reps);
  std::sort(reps.begin(), reps.end());
  out.ci.lo = quantile_sorted(reps, (1.0 - level) / 2.0);
  out.ci.hi = quantile_sorted(reps, (1.0 + level) / 2.0);
  out.degenerate = !(out.ci.width() > 0.0);
  return out;
}

}  // namespace

BootstrapResult bootstrap_mean(std::span<const double> x, int resamples, double level,
                               std::uint64_t seed) {
  if (x.empty()) throw InvalidArgument("bootstrap of an empty sample");
  if (resamples < 1) throw InvalidArgument("bootstrap needs at least one resample");
  check_level(level);
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, x.size() - 1);
  std::vector<double> reps(static_cast<std::size_t>(resamples));
  for (double& r : reps) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[pick(rng)];
    r = s / static_cast<double>(x.size());
  }
  BootstrapResult out = summarize(sample_mean(x), std::move(reps), level);
  // A percentile interval of the mean always contains it except in pathological
  // resampling; keep the invariant explicit.
  out.ci.lo = std::min(out.ci.lo, out.estimate);
  out.ci.hi = std::max(out.ci.hi, out.estimate);
  return out;
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw InvalidArgument("KS statistic of an empty sample");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size()), nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double t = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] == t) ++i;
    while (j < sb.size() && sb[j] == t) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return std::min(d, 1.0);
}

double ks_null_quantile(std::size_t na, std::size_t nb, double q, int reps, std::uint64_t seed) {
  if (na == 0 || nb == 0) throw InvalidArgument("KS null quantile needs nonempty samples");
  if (reps < 1) throw InvalidArgument("KS null quantile needs at least one repetition");
  check_level(q);
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> a(na), b(nb), stats(static_cast<std::size_t>(reps));
  for (double& s : stats) {
    for (double& v : a) v = u(rng);
    for (double& v : b) v = u(rng);
    s = ks_statistic(a, b);
  }
  std::sort(stats.begin(), stats.end());
  return quantile_sorted(stats, q);
}

PsiFunction ramp(double delta, double rho) {
  if (!(delta > 0.0)) throw InvalidArgument("ramp width must be positive");
  return PsiFunction{fmt::format("ramp(delta={:.6g},rho={:.6g})", delta, rho),
                     [delta, rho](double t) {
                       if (t < rho) return 0.0;
                       if (t >= rho + delta) return 1.0;
                       return (t - rho) / delta;
                     },
                     1.0 / delta};
}

PsiFunction clipped_identity(double center, double c) {
  if (!(c > 0.0)) throw InvalidArgument("clip level must be positive");
  return PsiFunction{fmt::format("clip-id(center={:.6g},c={:.6g})", center, c),
                     [center, c](double t) { return std::clamp(t - center, -c, c); }, 1.0};
}

PsiFunction clipped_quadratic(double center, double c) {
  if (!(c > 0.0)) throw InvalidArgument("clip level must be positive");
  return PsiFunction{fmt::format("clip-sq(center={:.6g},c={:.6g})", center, c),
                     [center, c](double t) { return std::min((t - center) * (t - center), c * c); },
                     2.0 * c};
}

std::vector<PsiFunction> psi_dictionary(std::span<const double> deltas,
                                        std::span<const double> rhos, double center,
                                        double scale) {
  std::vector<PsiFunction> out;
  for (double d : deltas)
    for (double r : rhos) out.push_back(ramp(d, r));
  if (scale > 0.0) {
    out.push_back(clipped_identity(center, scale));
    out.push_back(clipped_quadratic(center, scale));
  }
  return out;
}

std::vector<PsiFunction> default_psi_dictionary(std::span<const double> a,
                                                std::span<const double> b) {
  if (a.empty() || b.empty()) throw InvalidArgument("psi dictionary from an empty sample");
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::sort(pooled.begin(), pooled.end());
  double sd = sample_sd(pooled);
  if (!(sd > 0.0)) sd = std::max(1e-12, 1e-6 * std::abs(pooled.front()));
  std::vector<double> rhos;
  for (int i = 0; i <= 9; ++i) rhos.push_back(quantile_sorted(pooled, 0.05 + 0.1 * i));
  const std::vector<double> deltas = {0.5 * sd, sd, 2.0 * sd};
  return psi_dictionary(deltas, rhos, quantile_sorted(pooled, 0.5), sd);
}

namespace {

struct GapEval {
  std::vector<double> gaps;
  double max_gap = 0.0;
  std::size_t argmax = 0;
};

template <class IndexA, class IndexB>
GapEval eval_gaps(const std::vector<PsiFunction>& dict, std::size_t na, std::size_t nb,
                  IndexA ai, IndexB bi, std::span<const double> a, std::span<const double> b) {
  GapEval out;
  out.gaps.reserve(dict.size());
  for (std::size_t k = 0; k < dict.size(); ++k) {
    double sa = 0.0, sb = 0.0;
    for (std::size_t i = 0; i < na; ++i) sa += dict[k].fn(a[ai(i)]);
    for (std::size_t i = 0; i < nb; ++i) sb += dict[k].fn(b[bi(i)]);
    const double g = std::abs(sa / static_cast<double>(na) - sb / static_cast<double>(nb));
    out.gaps.push_back(g);
    if (g > out.max_gap || k == 0) {
      out.max_gap = g;
      out.argmax = k;
    }
  }
  return out;
}

}  // namespace

BlGapResult bl_gap(std::span<const double> a, std::span<const double> b,
                   const std::vector<PsiFunction>& dictionary, int resamples, std::uint64_t seed) {
  if (a.empty() || b.empty()) throw InvalidArgument("bl_gap: empty sample");
  if (dictionary.empty()) throw InvalidArgument("bl_gap: empty dictionary");
  if (resamples < 1) throw InvalidArgument("bl_gap: need at least one resample");
  auto identity = [](std::size_t i) { return i; };
  GapEval point = eval_gaps(dictionary, a.size(), b.size(), identity, identity, a, b);

  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pa(0, a.size() - 1), pb(0, b.size() - 1);
  std::vector<std::size_t> ia(a.size()), ib(b.size());
  std::vector<double> reps(static_cast<std::size_t>(resamples));
  for (double& r : reps) {
    for (auto& v : ia) v = pa(rng);
    for (auto& v : ib) v = pb(rng);
    r = eval_gaps(dictionary, a.size(), b.size(), [&](std::size_t i) { return ia[i]; },
                  [&](std::size_t i) { return ib[i]; }, a, b)
            .max_gap;
  }
  BlGapResult out;
  out.max_gap_bootstrap = summarize(point.max_gap, std::move(reps), 0.95);
  // The max of absolute gaps is biased upward under resampling, so the raw
  // percentile interval can sit above the estimate; hull it.
  out.max_gap_bootstrap.ci.lo = std::min(out.max_gap_bootstrap.ci.lo, point.max_gap);
  out.max_gap_bootstrap.ci.hi = std::max(out.max_gap_bootstrap.ci.hi, point.max_gap);
  out.gaps = std::move(point.gaps);
  out.max_gap = point.max_gap;
  out.argmax = point.argmax;
  return out;
}

}  // namespace ermu
