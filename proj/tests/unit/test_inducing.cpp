#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "oracles.hpp"
#include "sgpr/errors.hpp"
#include "sgpr/inducing.hpp"
#include "sgpr/svgp.hpp"

using namespace sgpr;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd column(std::initializer_list<double> v) {
  MatrixXd x(static_cast<Index>(v.size()), 1);
  Index i = 0;
  for (double e : v) x(i++, 0) = e;
  return x;
}

double det_of(const MatrixXd& k, const std::vector<Index>& s) { return oracle::principal(k, s).determinant(); }

}  // namespace

TEST(UniformSubset, FullAndDeterministic) {
  const auto all = uniform_subset(7, 7, 3);
  for (Index i = 0; i < 7; ++i) EXPECT_EQ(all[static_cast<std::size_t>(i)], i);
  EXPECT_EQ(uniform_subset(100, 10, 42), uniform_subset(100, 10, 42));
  EXPECT_NE(uniform_subset(100, 10, 42), uniform_subset(100, 10, 43));
  EXPECT_THROW(uniform_subset(5, 6, 1), MTooLarge);
}

TEST(UniformSubset, DistinctSortedAndUniformFrequencies) {
  const Index n = 10, m = 3;
  const int trials = 100000;
  std::vector<double> count(n, 0.0);
  for (int s = 0; s < trials; ++s) {
    const auto idx = uniform_subset(n, m, static_cast<std::uint64_t>(s));
    ASSERT_TRUE(std::is_sorted(idx.begin(), idx.end()));
    ASSERT_EQ(std::adjacent_find(idx.begin(), idx.end()), idx.end());
    for (Index i : idx) count[static_cast<std::size_t>(i)] += 1.0;
  }
  const double p = static_cast<double>(m) / n;
  const double se = std::sqrt(p * (1 - p) / trials);
  for (double c : count) EXPECT_LE(std::abs(c / trials - p), 3.5 * se);
}

TEST(Greedy, FirstIndexByTieBreak) {
  const MatrixXd x = sample_inputs(DensitySpec::gaussian(0.0, 1.0), 20, 1);
  EXPECT_EQ(greedy_det_init(KernelSpec::squared_exponential(1.0, 0.5), x, 1), std::vector<Index>{0});
}

TEST(Greedy, TwoClustersMatchEnumeration) {
  const MatrixXd x = column({0.0, 0.1, 0.2, 5.0, 5.1});
  const auto k = KernelSpec::squared_exponential(1.0, 1.0);
  const MatrixXd kff = gram(k, x);
  std::vector<Index> best;
  double best_det = -1.0;
  for (const auto& s : oracle::subsets(5, 2)) {
    const double d = det_of(kff, s);
    if (d > best_det) best_det = d, best = s;
  }
  auto g = greedy_det_init(k, x, 2);
  std::sort(g.begin(), g.end());
  EXPECT_EQ(g, best);
  EXPECT_LT(g[0], 3);
  EXPECT_GE(g[1], 3);
}

TEST(Greedy, BeatsUniformSubsets) {
  const auto k = KernelSpec::squared_exponential(1.0, 0.5);
  for (std::uint64_t trial = 0; trial < 50; ++trial) {
    const MatrixXd x = sample_inputs(DensitySpec::gaussian(0.0, 1.0), 40, trial);
    const MatrixXd kff = gram(k, x);
    const auto g = greedy_det_init(GramSource(kff), 6);
    EXPECT_GE(det_of(kff, g), det_of(kff, uniform_subset(40, 6, trial)));
  }
}

TEST(Greedy, PerStepArgmaxAndLazySourceAgree) {
  const auto k = KernelSpec::matern(1, 1.3, 0.4);
  const MatrixXd x = sample_inputs(DensitySpec::uniform(0.0, 3.0), 30, 2);
  const MatrixXd kff = gram(k, x);
  const auto g = greedy_det_init(GramSource(kff), 8);
  EXPECT_EQ(g, greedy_det_init(k, x, 8));
  std::vector<Index> prefix;
  for (Index step = 0; step < 8; ++step) {
    double best = -1.0;
    Index arg = -1;
    for (Index j = 0; j < 30; ++j) {
      if (std::find(prefix.begin(), prefix.end(), j) != prefix.end()) continue;
      auto s = prefix;
      s.push_back(j);
      const double d = det_of(kff, s);
      if (d > best * (1 + 1e-12)) best = d, arg = j;
    }
    EXPECT_EQ(g[static_cast<std::size_t>(step)], arg) << "step " << step;
    prefix.push_back(g[static_cast<std::size_t>(step)]);
  }
}

TEST(Greedy, RankDeficientKernel) {
  const MatrixXd x = column({0.0, 0.0, 1.0, 1.0});
  const auto k = KernelSpec::squared_exponential(1.0, 0.5);
  EXPECT_THROW(greedy_det_init(k, x, 3), DegenerateKernel);
  EXPECT_EQ(greedy_det_prefix(GramSource(k, x), 3).size(), 2u);
  EXPECT_THROW(greedy_det_init(k, x, 5), MTooLarge);
}

TEST(MixingSteps, Values) {
  EXPECT_EQ(mixing_steps(1000, 10, 1e-3), 759854u);
  EXPECT_EQ(mixing_steps(1000, 10, 1.0 - 1e-15), static_cast<std::uint64_t>(std::ceil(100000.0 * std::log(1000.0))));
  EXPECT_LT(mixing_steps(1000, 10, 1e-3), mixing_steps(1000, 11, 1e-3));
  EXPECT_LT(mixing_steps(1000, 10, 1e-3), mixing_steps(1001, 10, 1e-3));
  EXPECT_LT(mixing_steps(1000, 10, 1e-3), mixing_steps(1000, 10, 1e-4));
  EXPECT_THROW(mixing_steps(10, 2, 0.0), InvalidEpsilon);
  EXPECT_THROW(mixing_steps(10, 2, 1.0), InvalidEpsilon);
}

TEST(Enumeration, Oracles) {
  const MatrixXd x = sample_inputs(DensitySpec::gaussian(0.0, 1.0), 4, 1);
  const auto single = exact_kdpp_enumeration(gram(KernelSpec::squared_exponential(1.0, 1.0), x), 4);
  ASSERT_EQ(single.subsets.size(), 1u);
  EXPECT_DOUBLE_EQ(single.probabilities[0], 1.0);

  const VectorXd d = (VectorXd(5) << 1.0, 2.0, 3.0, 4.0, 5.0).finished();
  const auto diag = exact_kdpp_enumeration(MatrixXd(d.asDiagonal()), 2);
  double z = 0.0;
  for (const auto& s : diag.subsets) z += d(s[0]) * d(s[1]);
  for (std::size_t i = 0; i < diag.subsets.size(); ++i) {
    EXPECT_NEAR(diag.probabilities[i], d(diag.subsets[i][0]) * d(diag.subsets[i][1]) / z, 1e-15);
  }

  CounterRng rng(5);
  const auto table = exact_kdpp_enumeration(oracle::random_spd(rng, 8), 3);
  EXPECT_EQ(table.subsets.size(), 56u);
  double total = 0.0;
  for (double p : table.probabilities) total += p;
  EXPECT_NEAR(total, 1.0, 1e-10);
  EXPECT_EQ(table.rank(std::vector<Index>{0, 1, 2}), 0u);
  EXPECT_EQ(table.rank(std::vector<Index>{5, 6, 7}), 55u);

  EXPECT_THROW(exact_kdpp_enumeration(MatrixXd::Identity(40, 40), 20), EnumerationTooLarge);
}

TEST(KdppChain, ZeroStepsIsGreedy) {
  const auto k = KernelSpec::squared_exponential(1.0, 0.5);
  const MatrixXd x = sample_inputs(DensitySpec::gaussian(0.0, 1.0), 30, 3);
  auto g = greedy_det_init(k, x, 5);
  std::sort(g.begin(), g.end());
  EXPECT_EQ(kdpp_mcmc(k, x, 5, 0, 9), g);
  EXPECT_EQ(kdpp_mcmc(k, x, 5, 5000, 9), kdpp_mcmc(k, x, 5, 5000, 9));
}

TEST(KdppChain, OneStepTransitionsMatchMetropolisKernel) {
  // Single steps from a fixed state over many seeds against
  // P(S -> T) = 1/(M (N - M)) * 1/2 min(1, det K_T / det K_S).
  CounterRng rng(11);
  const MatrixXd k = oracle::random_spd(rng, 5, 0.2);
  const GramSource src(k);
  const std::vector<Index> s0{1, 3};
  const int trials = 200000;
  std::map<std::vector<Index>, int> seen;
  for (int t = 0; t < trials; ++t) {
    KdppChain chain(src, s0, static_cast<std::uint64_t>(t));
    chain.step();
    seen[chain.sorted_subset()] += 1;
  }
  const double ds = det_of(k, s0);
  for (Index i : s0) {
    for (Index j = 0; j < 5; ++j) {
      if (j == 1 || j == 3) continue;
      std::vector<Index> tset{i == 1 ? Index{3} : Index{1}, j};
      std::sort(tset.begin(), tset.end());
      const double p = 0.5 * std::min(1.0, det_of(k, tset) / ds) / 6.0;
      const double se = std::sqrt(p * (1 - p) / trials);
      EXPECT_NEAR(seen[tset] / static_cast<double>(trials), p, 4 * se + 1e-12);
      // Detailed balance of the kernel itself.
      const double back = 0.5 * std::min(1.0, ds / det_of(k, tset)) / 6.0;
      EXPECT_NEAR(ds * p, det_of(k, tset) * back, 1e-14);
    }
  }
}

TEST(KdppChain, NeverHoldsBothDuplicates) {
  const MatrixXd x = column({0.0, 0.0, 0.7, 1.4, 2.1, 2.1, 3.0});
  const auto k = KernelSpec::squared_exponential(1.0, 0.6);
  const GramSource src(k, x);
  KdppChain chain(src, greedy_det_init(src, 3), 4);
  bool clash = false;
  chain.run(20000, [&](std::uint64_t, std::span<const Index> s) {
    const auto has = [&](Index i) { return std::find(s.begin(), s.end(), i) != s.end(); };
    clash = clash || (has(0) && has(1)) || (has(4) && has(5));
  });
  EXPECT_FALSE(clash);
  EXPECT_GT(chain.stats().singular_rejections, 0u);
  EXPECT_GT(chain.log_det(), -std::numeric_limits<double>::infinity());
}

TEST(KdppChain, DriftGuardAndFactorConsistency) {
  const auto k = KernelSpec::squared_exponential(1.0, 0.5);
  const MatrixXd x = sample_inputs(DensitySpec::gaussian(0.0, 1.0), 60, 6);
  const MatrixXd kff = gram(k, x);
  const GramSource src(kff);
  KdppChain chain(src, greedy_det_init(src, 8), 2, 0, 10000);
  chain.run(100000);
  EXPECT_EQ(chain.stats().refactorizations, 10u);
  EXPECT_LE(chain.stats().max_drift, 1e-6);
  std::vector<Index> members(chain.members().begin(), chain.members().end());
  EXPECT_NEAR(chain.log_det(), std::log(det_of(kff, members)), 1e-8);
  EXPECT_GT(chain.stats().accepted, 0u);
}

TEST(KdppChain, SmallChainMatchesEnumeration) {
  const MatrixXd x = sample_inputs(DensitySpec::gaussian(0.0, 1.0), 8, 21);
  const MatrixXd kff = gram(KernelSpec::squared_exponential(1.0, 0.8), x);
  const auto table = exact_kdpp_enumeration(kff, 2);
  const GramSource src(kff);
  KdppChain chain(src, greedy_det_init(src, 2), 8);
  std::vector<double> freq(table.subsets.size(), 0.0);
  std::vector<Index> sorted(2);
  const std::uint64_t steps = 300000;
  chain.run(steps, [&](std::uint64_t, std::span<const Index> s) {
    sorted.assign(s.begin(), s.end());
    std::sort(sorted.begin(), sorted.end());
    freq[table.rank(sorted)] += 1.0;
  });
  double tv = 0.0;
  for (std::size_t i = 0; i < freq.size(); ++i) tv += std::abs(freq[i] / steps - table.probabilities[i]);
  EXPECT_LE(0.5 * tv, 0.05);
}

TEST(EigenvectorFeatures, OptimalAgainstRandomPointSets) {
  const auto k = KernelSpec::squared_exponential(1.0, 0.5);
  const MatrixXd x = sample_inputs(DensitySpec::gaussian(0.0, 1.0), 50, 7);
  const MatrixXd kff = gram(k, x);
  const auto f = eigenvector_features(kff, x, 6);
  EXPECT_TRUE(std::is_sorted(f.lambda.data(), f.lambda.data() + 6, std::greater<>()));
  EXPECT_LE((f.W.transpose() * f.W - MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-12);
  const double t_eig = trace_gap(feature_operators(f, k, x));
  EXPECT_NEAR(t_eig / oracle::eigenvalues_desc(kff).tail(44).sum(), 1.0, 1e-8);
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    const auto idx = uniform_subset(50, 6, trial);
    EXPECT_GE((kff - oracle::nystrom(kff, idx)).trace(), t_eig * (1 - 1e-8));
  }
  const auto ou = KernelSpec::matern(0, 1.0, 0.3);
  const MatrixXd x10 = x.topRows(10);
  EXPECT_NEAR(trace_gap(feature_operators(eigenvector_features(ou, x10, 10), ou, x10)), 0.0, 1e-10);
}

TEST(SelectionCsv, SortedLine) {
  EXPECT_EQ(selection_csv_line("fig2", "kdpp", 3, {9, 2, 5}), "fig2,kdpp,3,2 5 9");
  EXPECT_EQ(selection_csv_line("r", "uniform", 1, {}), "r,uniform,1,");
}
