#include "ermu/free_energy.hpp"
#include "ermu/gaussian_equiv.hpp"
#include "ermu/rng.hpp"
#include "ermu/solver.hpp"
#include "ermu/universality.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

using namespace ermu;

static void BM_FeaturizeRf(benchmark::State& state) {
  const Index p = state.range(0);
  const FeatureModel m = FeatureModel::random_features(sample_sphere_weights(p / 2, p, 1), Activation::tanh_rf());
  const Matrix Z = standard_normal(4 * p / 3, p / 2, 2);
  for (auto _ : state) benchmark::DoNotOptimize(m.featurize(Z));
}
BENCHMARK(BM_FeaturizeRf)->Arg(150)->Arg(300)->Arg(600)->Unit(benchmark::kMillisecond);

static void BM_FeaturizeNt(benchmark::State& state) {
  const Index d = state.range(0);
  const FeatureModel m = FeatureModel::neural_tangent(sample_sphere_weights(d, d, 1), Activation::shifted_sine_nt());
  const Matrix Z = standard_normal(1046, d, 2);
  for (auto _ : state) benchmark::DoNotOptimize(m.featurize(Z));
}
BENCHMARK(BM_FeaturizeNt)->Arg(20)->Arg(28)->Unit(benchmark::kMillisecond);

static void BM_HermiteCovariance(benchmark::State& state) {
  const Index p = state.range(0);
  const Matrix W = sample_sphere_weights(p / 2, p, 3);
  const std::vector<double> c = {0.0, 0.7, 0.0, 0.2, 0.0, 0.1};
  for (auto _ : state) benchmark::DoNotOptimize(rf_covariance_hermite(W, c, 5));
}
BENCHMARK(BM_HermiteCovariance)->Arg(150)->Arg(600)->Unit(benchmark::kMillisecond);

static void BM_McCovariance(benchmark::State& state) {
  const Index p = state.range(0);
  const FeatureModel m = FeatureModel::random_features(sample_sphere_weights(p / 2, p, 1), Activation::tanh_rf());
  for (auto _ : state) benchmark::DoNotOptimize(mc_covariance(m, 50 * p, 4));
}
BENCHMARK(BM_McCovariance)->Arg(150)->Arg(300)->Unit(benchmark::kMillisecond);

static void BM_SolveHuberRidge(benchmark::State& state) {
  const Index n = state.range(0), p = 3 * n / 4;
  ErmProblem pr;
  pr.loss = Loss::huber(1.0);
  pr.labeler = Labeler::linear(0.5);
  pr.regularizer = Regularizer::ridge(0.1);
  pr.constraint = ConstraintSet::l2_ball(3.0);
  pr.theta_star = Matrix::Constant(p, 1, 1.0 / std::sqrt(static_cast<double>(p)));
  const Matrix X = standard_normal(n, p, 5);
  const Vector y = generate_labels(pr, X, 6);
  for (auto _ : state) benchmark::DoNotOptimize(solve_erm(pr, X, y, {}));
}
BENCHMARK(BM_SolveHuberRidge)->Arg(200)->Arg(400)->Arg(800)->Unit(benchmark::kMillisecond);

static void BM_Softmin(benchmark::State& state) {
  const Vector v = standard_normal(state.range(0), 7).cwiseAbs();
  const std::vector<double> vals(v.data(), v.data() + v.size());
  for (auto _ : state) benchmark::DoNotOptimize(softmin(vals, 128, 10.0));
}
BENCHMARK(BM_Softmin)->Arg(512)->Arg(1 << 16);

static void BM_SingleTrial(benchmark::State& state) {
  FamilySpec f;
  f.id = "linear";
  f.kind = FamilyKind::LinearIndependent;
  const FamilyInstance inst = make_family_instance(f, {}, static_cast<int>(state.range(0)), 1);
  int trial = 0;
  for (auto _ : state) benchmark::DoNotOptimize(run_single_trial(inst, 1, trial++, {}, 4000));
}
BENCHMARK(BM_SingleTrial)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
