#include <benchmark/benchmark.h>

#include "sgpr/chol.hpp"
#include "sgpr/gp_exact.hpp"
#include "sgpr/inducing.hpp"
#include "sgpr/kernels.hpp"
#include "sgpr/rng.hpp"
#include "sgpr/svgp.hpp"

namespace {

using namespace sgpr;

Eigen::MatrixXd inputs(Index n, std::uint64_t seed = 1) {
  return sample_inputs(DensitySpec::gaussian(0.0, 1.0), n, seed);
}

Eigen::MatrixXd spd(Index m) {
  CounterRng rng(3);
  Eigen::MatrixXd a(m, m);
  for (Index j = 0; j < m; ++j)
    for (Index i = 0; i < m; ++i) a(i, j) = rng.normal();
  return a * a.transpose() + Eigen::MatrixXd::Identity(m, m);
}

void BM_RankOneUpdate(benchmark::State& state) {
  const Index m = state.range(0);
  const auto f = chol::factor(spd(m));
  const Eigen::VectorXd v = Eigen::VectorXd::Ones(m);
  for (auto _ : state) benchmark::DoNotOptimize(chol::rank_one_update(f, v));
}
BENCHMARK(BM_RankOneUpdate)->Arg(16)->Arg(64)->Arg(256);

void BM_WorkspaceSwap(benchmark::State& state) {
  const Index m = state.range(0);
  const Eigen::MatrixXd a = spd(m + 1);
  chol::FactorWorkspace current(m), trial(m);
  current.assign(chol::factor(a.topLeftCorner(m, m)));
  trial.assign(current);
  Eigen::VectorXd k(m - 1);
  for (auto _ : state) {
    trial.remove(0);
    for (Index r = 0; r < m - 1; ++r) k(r) = a(r + 1, m);
    benchmark::DoNotOptimize(trial.append(k, a(m, m)));
    trial.restore_after_swap(current, 0);
  }
}
BENCHMARK(BM_WorkspaceSwap)->Arg(16)->Arg(32)->Arg(64);

void BM_KdppStep(benchmark::State& state) {
  const Index m = state.range(0);
  const Eigen::MatrixXd x = inputs(2000);
  const Eigen::MatrixXd kff = gram(KernelSpec::squared_exponential(1.0, 0.6), x);
  const GramSource source(kff);
  KdppChain chain(source, greedy_det_init(source, m), 1);
  for (auto _ : state) chain.step();
}
BENCHMARK(BM_KdppStep)->Arg(10)->Arg(20)->Arg(30);

void BM_Gram(benchmark::State& state) {
  const Eigen::MatrixXd x = inputs(state.range(0));
  const KernelSpec k = KernelSpec::squared_exponential(1.0, 0.6);
  for (auto _ : state) benchmark::DoNotOptimize(gram(k, x));
}
BENCHMARK(BM_Gram)->Arg(500)->Arg(2000);

void BM_Elbo(benchmark::State& state) {
  const Index n = state.range(0);
  const Eigen::MatrixXd x = inputs(n);
  const KernelSpec k = KernelSpec::squared_exponential(1.0, 0.6);
  const NoiseModel noise{1.0};
  const Eigen::VectorXd y = sample_prior_outputs(x, k, noise, 2);
  const InducingSet z = PointsSet{x.topRows(20)};
  for (auto _ : state) {
    const SparseApproximation approx(feature_operators(z, k, x));
    benchmark::DoNotOptimize(approx.elbo(y, noise));
  }
}
BENCHMARK(BM_Elbo)->Arg(1000)->Arg(10000);

void BM_KlEvaluator(benchmark::State& state) {
  const Index n = state.range(0);
  const Eigen::MatrixXd x = inputs(n);
  const KernelSpec k = KernelSpec::squared_exponential(1.0, 0.6);
  const NoiseModel noise{1.0};
  const Eigen::MatrixXd kff = gram(k, x);
  const Eigen::VectorXd y = sample_prior_outputs(x, k, noise, 2);
  const SparseApproximation approx(feature_operators(PointsSet{x.topRows(20)}, k, x));
  for (auto _ : state) benchmark::DoNotOptimize(KlEvaluator(kff, approx, noise)(y));
}
BENCHMARK(BM_KlEvaluator)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
