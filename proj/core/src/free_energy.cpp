#include "ermu/free_energy.hpp"

#include "ermu/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ermu {

std::string to_string(CandidateConstruction c) {
  return c == CandidateConstruction::RandomNet ? "random-net" : "solution-cloud";
}

CandidateSet CandidateSet::random_net(const ConstraintSet& set, Index p, Index k, std::size_t count,
                                      double scale, std::uint64_t seed) {
  if (count < 1) throw InvalidArgument("random_net: need at least one candidate");
  CandidateSet out;
  out.construction = CandidateConstruction::RandomNet;
  out.alpha = scale;
  out.points.reserve(count);
  const double s = scale / std::sqrt(static_cast<double>(p));
  for (std::size_t i = 0; i < count; ++i)
    out.points.push_back(set.project(Matrix(standard_normal(p, k, derive_seed(seed, {i})) * s)));
  return out;
}

CandidateSet CandidateSet::solution_cloud(const Matrix& center, const ConstraintSet& set,
                                          std::size_t count, double alpha, std::uint64_t seed) {
  if (count < 1) throw InvalidArgument("solution_cloud: need at least one candidate");
  constexpr int kLevels = 8;
  CandidateSet out;
  out.construction = CandidateConstruction::SolutionCloud;
  out.alpha = alpha;
  out.points.reserve(count);
  out.points.push_back(set.project(center));
  for (std::size_t i = 1; i < count; ++i) {
    const double radius = std::ldexp(alpha, -static_cast<int>((i - 1) % kLevels));
    Matrix dir = standard_normal(center.rows(), center.cols(), derive_seed(seed, {i}));
    const double norm = dir.norm();
    if (norm > 0.0) dir /= norm;
    out.points.push_back(set.project(Matrix(center + radius * dir)));
  }
  return out;
}

double softmin(std::span<const double> values, Index n, double beta) {
  if (values.empty()) throw InvalidArgument("free energy over an empty candidate set");
  if (!(beta > 0.0)) throw InvalidArgument("free energy: beta must be positive");
  if (n < 1) throw InvalidArgument("free energy: n must be >= 1");
  const double vmin = *std::min_element(values.begin(), values.end());
  const double nb = static_cast<double>(n) * beta;
  double sum = 0.0;
  for (double v : values) sum += std::exp(-nb * (v - vmin));
  return vmin - std::log(sum) / nb;
}

double gibbs_entropy(std::span<const double> values, Index n, double beta) {
  if (values.empty()) throw InvalidArgument("entropy over an empty candidate set");
  const double vmin = *std::min_element(values.begin(), values.end());
  const double nb = static_cast<double>(n) * beta;
  double sum = 0.0;
  for (double v : values) sum += std::exp(-nb * (v - vmin));
  double h = 0.0;
  for (double v : values) {
    const double w = std::exp(-nb * (v - vmin)) / sum;
    if (w > 0.0) h -= w * std::log(w);
  }
  return std::max(h, 0.0);
}

std::vector<double> candidate_risks(const CandidateSet& candidates, const ErmProblem& problem,
                                    const Matrix& X, const Vector& y) {
  const EmpiricalRisk risk(problem, X, y);
  std::vector<double> values;
  values.reserve(candidates.size());
  for (const Matrix& theta : candidates.points) values.push_back(risk.value(theta));
  return values;
}

double free_energy(const CandidateSet& candidates, const ErmProblem& problem, const Matrix& X,
                   const Vector& y, double beta) {
  if (candidates.points.empty()) throw InvalidArgument("free_energy: empty candidate set");
  const auto values = candidate_risks(candidates, problem, X, y);
  return softmin(values, X.rows(), beta);
}

Matrix InterpolationPath::at(double t) const {
  if (t == 0.0) return G;
  if (t == std::numbers::pi / 2) return X;
  return std::sin(t) * X + std::cos(t) * G;
}

namespace {

void check_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw InvalidArgument("path grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < 0.0 || grid[i] > std::numbers::pi / 2)
      throw InvalidArgument("path grid value outside [0, pi/2]");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw InvalidArgument("path grid is not sorted ascending");
  }
}

}  // namespace

std::vector<PathPoint> free_energy_path(const InterpolationPath& path,
                                        const CandidateSet& candidates, const ErmProblem& problem,
                                        const Vector& eps, double beta) {
  check_grid(path.grid);
  if (path.X.rows() != path.G.rows() || path.X.cols() != path.G.cols())
    throw InvalidArgument("path endpoints differ in shape");
  std::vector<PathPoint> out;
  out.reserve(path.grid.size());
  for (double t : path.grid) {
    const Matrix U = path.at(t);
    const Vector y = labels_from_noise(problem, U, eps);
    out.push_back(PathPoint{t, free_energy(candidates, problem, U, y, beta), 0.0});
  }
  for (std::size_t i = 0; i + 1 < out.size(); ++i)
    out[i].segment_slope = std::abs(out[i + 1].f - out[i].f) / (out[i + 1].t - out[i].t);
  return out;
}

double path_slope_bound(const InterpolationPath& path, const CandidateSet& candidates,
                        const ErmProblem& problem, const Vector& eps) {
  double A = 0.0;
  for (const Matrix& theta : candidates.points)
    for (Index j = 0; j < theta.cols(); ++j) A = std::max(A, theta.col(j).norm());
  double B = 0.0;
  for (Index j = 0; j < problem.theta_star.cols(); ++j) B += problem.theta_star.col(j).norm();
  const Labeler& lab = problem.labeler;
  const double eta_v = lab.kind() == LabelKind::SignSmooth ? 1.0 / lab.scale() : 1.0;

  const Index n = path.X.rows();
  double acc = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double r = path.X.row(i).norm() + path.G.row(i).norm();
    const double yhat_max = A * r;
    double y_max = 0.0;
    switch (lab.kind()) {
      case LabelKind::Linear: y_max = B * r + lab.tau() * std::abs(eps(i)); break;
      case LabelKind::ClippedLinear: y_max = std::min(B * r, lab.bound()) + lab.tau() * std::abs(eps(i)); break;
      case LabelKind::SignSmooth: y_max = 1.0 + lab.tau() * std::abs(eps(i)); break;
    }
    double d1 = 0.0, d2 = 0.0;
    switch (problem.loss.kind()) {
      case LossKind::Huber:
      case LossKind::PseudoHuber: d1 = d2 = problem.loss.delta(); break;
      case LossKind::Logistic: d1 = y_max; d2 = yhat_max; break;
      case LossKind::Squared: d1 = d2 = 2.0 * (yhat_max + y_max); break;
    }
    acc += (d1 * A + d2 * eta_v * B) * r;
  }
  return acc / static_cast<double>(n);
}

SandwichReport entropy_sandwich_check(const CandidateSet& candidates, const ErmProblem& problem,
                                      const Matrix& X, const Vector& y,
                                      std::span<const double> beta_grid) {
  for (std::size_t i = 1; i < beta_grid.size(); ++i)
    if (!(beta_grid[i] > beta_grid[i - 1])) throw InvalidArgument("beta grid is not ascending");
  const auto values = candidate_risks(candidates, problem, X, y);
  const double vmin = *std::min_element(values.begin(), values.end());
  const Index n = X.rows();
  const double logm = std::log(static_cast<double>(values.size()));

  SandwichReport rep;
  for (std::size_t i = 0; i < beta_grid.size(); ++i) {
    const double beta = beta_grid[i];
    SandwichEntry e;
    e.beta = beta;
    e.f = softmin(values, n, beta);
    e.upper = vmin;
    e.lower = vmin - logm / (static_cast<double>(n) * beta);
    e.entropy = gibbs_entropy(values, n, beta);
    e.dfdbeta = e.entropy / (beta * beta * static_cast<double>(n));
    e.bounds_ok = e.lower <= e.f && e.f <= e.upper;
    bool flagged = !e.bounds_ok;
    if (i > 0 && e.f < rep.entries.back().f) {
      rep.monotone = false;
      flagged = true;
    }
    if (flagged) rep.violations.push_back(beta);
    rep.entries.push_back(e);
  }
  return rep;
}

}  // namespace ermu
