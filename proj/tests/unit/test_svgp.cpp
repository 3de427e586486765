#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "sgpr/bounds.hpp"
#include "sgpr/errors.hpp"
#include "sgpr/gp_exact.hpp"
#include "sgpr/inducing.hpp"
#include "sgpr/svgp.hpp"

using namespace sgpr;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct Problem {
  MatrixXd x;
  VectorXd y;
  KernelSpec kernel;
  NoiseModel noise;
  MatrixXd kff;
};

Problem make_problem(Index n, std::uint64_t seed, KernelSpec kernel = KernelSpec::squared_exponential(1.0, 0.6),
                     double noise = 0.5) {
  Problem p;
  p.kernel = kernel;
  p.noise = {noise};
  p.x = sample_inputs(DensitySpec::gaussian(0.0, 1.0), n, seed);
  p.kff = gram(kernel, p.x);
  p.y = sample_prior_outputs(p.x, kernel, p.noise, seed, 1);
  return p;
}

MatrixXd rows(const MatrixXd& x, const std::vector<Index>& idx) {
  MatrixXd out(static_cast<Index>(idx.size()), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Index>(i)) = x.row(idx[i]);
  return out;
}

MatrixXd q_ff(const FeatureOperators& ops) { return ops.Kuf.transpose() * ops.Kuu.ldlt().solve(ops.Kuf); }

}  // namespace

TEST(FeatureOps, PointsEqualToInputs) {
  const auto p = make_problem(12, 1);
  const auto ops = feature_operators(PointsSet{p.x}, p.kernel, p.x);
  EXPECT_LE((ops.Kuu - p.kff).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((ops.Kuf - p.kff).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(FeatureOps, DuplicateInducingPointRejected) {
  const auto p = make_problem(5, 2);
  MatrixXd z(2, 1);
  z << 0.3, 0.3;
  EXPECT_THROW(feature_operators(PointsSet{z}, p.kernel, p.x), DuplicateInducingPoint);
}

TEST(FeatureOps, EigenvectorFeaturesTruncateSpectrum) {
  const auto p = make_problem(40, 3, KernelSpec::matern(0, 1.0, 0.6));
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(p.kff);
  for (Index m : {5, 40}) {
    const auto ops = feature_operators(eigenvector_features(p.kff, p.x, m), p.kernel, p.x);
    const MatrixXd u = eig.eigenvectors().rightCols(m);
    const MatrixXd want = u * eig.eigenvalues().tail(m).asDiagonal() * u.transpose();
    EXPECT_LE((q_ff(ops) - want).cwiseAbs().maxCoeff(), 1e-8) << "M=" << m;
  }
}

TEST(OptimalQ, ZeroOutputsGiveZeroMean) {
  const auto p = make_problem(20, 4);
  const SparseApproximation approx(feature_operators(PointsSet{p.x.topRows(5)}, p.kernel, p.x));
  EXPECT_LE(approx.optimal_q(VectorXd::Zero(20), p.noise).mu.cwiseAbs().maxCoeff(), 0.0);
}

TEST(OptimalQ, FullInducingSetRecoversPosterior) {
  const auto p = make_problem(25, 5, KernelSpec::matern(1, 1.0, 0.6));
  const InducingSet z = PointsSet{p.x};
  const SparseApproximation approx(feature_operators(z, p.kernel, p.x));
  const auto sol = approx.optimal_q(p.y, p.noise);
  const auto pred = predict(sol, z, p.kernel, p.x);
  const auto post = posterior({p.x, p.y}, p.kernel, p.noise, p.x);
  EXPECT_LE((pred.mean - post.mean).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LE((pred.variance - post.covariance.diagonal()).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_NEAR(sol.elbo, approx.elbo(p.y, p.noise), 1e-12);
}

TEST(OptimalQ, PerturbationsLowerHensmanElbo) {
  const auto p = make_problem(30, 6);
  const SparseApproximation approx(feature_operators(PointsSet{p.x.topRows(6)}, p.kernel, p.x));
  const auto sol = approx.optimal_q(p.y, p.noise);
  const double best = hensman_elbo(approx, p.y, p.noise, sol.mu, sol.Sigma);
  EXPECT_NEAR(best, sol.elbo, 1e-8 * std::max(1.0, std::abs(best)));
  CounterRng rng(7);
  for (int rep = 0; rep < 10; ++rep) {
    const VectorXd dmu = 0.05 * oracle::normal_matrix(rng, 6, 1);
    const MatrixXd a = 0.05 * oracle::normal_matrix(rng, 6, 6);
    const MatrixXd sigma = sol.Sigma + a * a.transpose();
    EXPECT_LT(hensman_elbo(approx, p.y, p.noise, sol.mu + dmu, sol.Sigma), best);
    EXPECT_LT(hensman_elbo(approx, p.y, p.noise, sol.mu, sigma), best);
  }
}

TEST(Elbo, FullInducingSetEqualsEvidence) {
  const auto p = make_problem(30, 8, KernelSpec::matern(0, 1.0, 0.6));
  const auto ops = feature_operators(PointsSet{p.x}, p.kernel, p.x);
  const double L = log_marginal_likelihood({p.x, p.y}, p.kernel, p.noise);
  EXPECT_NEAR(elbo(ops, p.y, p.noise), L, 1e-8);
  EXPECT_NEAR(upper_bound(ops, p.y, p.noise, trace_gap(ops)), L, 1e-8);
  EXPECT_NEAR(trace_gap(ops), 0.0, 1e-12);
}

TEST(Elbo, ScalarCase) {
  // N = M = 1 with a distinct inducing point z: Q = k_xz^2 / v.
  const auto k = KernelSpec::squared_exponential(2.0, 1.0);
  const NoiseModel noise{0.3};
  const MatrixXd x = MatrixXd::Constant(1, 1, 0.0), z = MatrixXd::Constant(1, 1, 0.7);
  const VectorXd y = VectorXd::Constant(1, 1.2);
  const double kxz = 2.0 * std::exp(-0.5 * 0.49);
  const double q = kxz * kxz / 2.0, t = 2.0 - q;
  const double want = -0.5 * 1.44 / (q + 0.3) - 0.5 * std::log(q + 0.3) - 0.5 * std::log(2 * M_PI) - t / 0.6;
  EXPECT_NEAR(elbo(feature_operators(PointsSet{z}, k, x), y, noise), want, 1e-14);
}

TEST(Elbo, GapEqualsKlOnDenseInstances) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto p = make_problem(50, seed);
    const auto ops = feature_operators(PointsSet{p.x.topRows(7)}, p.kernel, p.x);
    const double L = log_marginal_likelihood({p.x, p.y}, p.kernel, p.noise);
    const double e = elbo(ops, p.y, p.noise);
    const double kl = kl_exact({p.x, p.y}, p.kernel, p.noise, ops);
    EXPECT_LE(e, L + 1e-10);
    EXPECT_NEAR(L - e, kl, 1e-8 * std::max(1.0, std::abs(L)));
    EXPECT_GE(kl, 0.0);
  }
}

TEST(TraceGap, EmptyAndEigenvectorCases) {
  const auto p = make_problem(60, 9);
  const auto empty = feature_operators(PointsSet{MatrixXd(0, 1)}, p.kernel, p.x);
  EXPECT_NEAR(trace_gap(empty), 60.0, 1e-12);
  const VectorXd lam = oracle::eigenvalues_desc(p.kff);
  for (Index m : {1, 5, 10}) {
    const auto ops = feature_operators(eigenvector_features(p.kff, p.x, m), p.kernel, p.x);
    EXPECT_NEAR(trace_gap(ops) / lam.tail(60 - m).sum(), 1.0, 1e-8);
  }
}

TEST(TraceGap, PointsResidualIsPsd) {
  const auto p = make_problem(150, 10);
  const auto idx = uniform_subset(150, 12, 3);
  const auto ops = feature_operators(PointsSet{rows(p.x, idx)}, p.kernel, p.x);
  EXPECT_GE(oracle::eigenvalues_desc(p.kff - oracle::nystrom(p.kff, idx)).minCoeff(), -1e-8);
  EXPECT_NEAR(trace_gap(ops), (p.kff - oracle::nystrom(p.kff, idx)).trace(), 1e-7);
}

TEST(LambdaMax, Oracles) {
  const auto p = make_problem(100, 11);
  const auto full = SparseApproximation(feature_operators(PointsSet{p.x}, p.kernel, p.x));
  EXPECT_NEAR(lambda_max_gap(p.kff, full), 0.0, 1e-8);
  const VectorXd lam = oracle::eigenvalues_desc(p.kff);
  const auto eig = SparseApproximation(feature_operators(eigenvector_features(p.kff, p.x, 4), p.kernel, p.x));
  EXPECT_NEAR(lambda_max_gap(p.kff, eig) / lam(4), 1.0, 1e-6);
  const auto idx = uniform_subset(100, 10, 5);
  const auto pts = SparseApproximation(feature_operators(PointsSet{rows(p.x, idx)}, p.kernel, p.x));
  const double dense = oracle::eigenvalues_desc(p.kff - oracle::nystrom(p.kff, idx))(0);
  const double lm = lambda_max_gap(p.kff, pts);
  EXPECT_NEAR(lm / dense, 1.0, 1e-6);
  EXPECT_LE(lm, pts.trace_gap());
  EXPECT_NEAR(lambda_max_gap(p.kernel, p.x, feature_operators(PointsSet{rows(p.x, idx)}, p.kernel, p.x)), lm,
              1e-6 * lm);
}

TEST(UpperBounds, SandwichAndRefinement) {
  const auto p = make_problem(200, 12);
  const auto ops = feature_operators(eigenvector_features(p.kff, p.x, 5), p.kernel, p.x);
  const SparseApproximation approx(ops);
  const double t = approx.trace_gap();
  const double lam = lambda_max_gap(p.kff, approx);
  const double L = log_marginal_likelihood({p.x, p.y}, p.kernel, p.noise);
  const double up = approx.upper_bound(p.y, p.noise, t);
  const double upr = approx.refined_upper_bound(p.y, p.noise, lam);
  EXPECT_LE(approx.elbo(p.y, p.noise), L);
  EXPECT_LE(L, upr);
  EXPECT_LT(upr, up);
  EXPECT_LE(lam, t);
  EXPECT_NEAR(approx.refined_upper_bound(p.y, p.noise, t), up, 1e-12 * std::abs(up));
}

TEST(UpperBounds, DenseEvidenceBelowUpper) {
  for (std::uint64_t seed = 20; seed < 25; ++seed) {
    const auto p = make_problem(50, seed, KernelSpec::matern(1, 1.0, 0.4));
    const auto ops = feature_operators(PointsSet{p.x.topRows(6)}, p.kernel, p.x);
    MatrixXd kn = p.kff;
    kn.diagonal().array() += p.noise.variance;
    EXPECT_GE(upper_bound(ops, p.y, p.noise, trace_gap(ops)), oracle::mvn_logpdf(p.y, kn));
  }
}

TEST(KlExact, ZeroForFullSetAndMatchesJointGaussian) {
  const auto p = make_problem(50, 13, KernelSpec::matern(0, 1.0, 0.6));
  EXPECT_NEAR(kl_exact({p.x, p.y}, p.kernel, p.noise, feature_operators(PointsSet{p.x}, p.kernel, p.x)), 0.0, 1e-10);

  // Z is a subset of X, so u is a coordinate of f and the joint KL reduces to
  // the KL between q(f) and p(f | y).
  const auto ops = feature_operators(PointsSet{p.x.topRows(5)}, p.kernel, p.x);
  const SparseApproximation approx(ops);
  const auto sol = approx.optimal_q(p.y, p.noise);
  const MatrixXd a = ops.Kuu.ldlt().solve(ops.Kuf).transpose();
  MatrixXd sq = p.kff - a * ops.Kuf + a * sol.Sigma * a.transpose();
  MatrixXd kn = p.kff;
  kn.diagonal().array() += p.noise.variance;
  const MatrixXd kinv = kn.inverse();
  MatrixXd sp = p.kff - p.kff * kinv * p.kff;
  sq = 0.5 * (sq + sq.transpose()).eval();
  sp = 0.5 * (sp + sp.transpose()).eval();
  const double want = oracle::dense_kl(a * sol.mu, sq, p.kff * kinv * p.y, sp);
  EXPECT_NEAR(kl_exact({p.x, p.y}, p.kernel, p.noise, ops) / want, 1.0, 1e-6);
}

TEST(KlExact, BelowLemma1OnRandomInstances) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto p = make_problem(60, 100 + seed);
    const auto idx = uniform_subset(60, 3 + seed % 7, seed);
    const SparseApproximation approx(feature_operators(PointsSet{rows(p.x, idx)}, p.kernel, p.x));
    const double kl = KlEvaluator(p.kff, approx, p.noise)(p.y);
    const auto l1 = lemma1(approx.trace_gap(), lambda_max_gap(p.kff, approx), p.y.squaredNorm(), p.noise.variance);
    EXPECT_LE(kl, l1.tight * (1 + 1e-10));
    EXPECT_LE(l1.tight, l1.loose);
  }
}

TEST(KlExact, DenseLimit) {
  const auto p = make_problem(30, 14);
  EXPECT_THROW(kl_exact({p.x, p.y}, p.kernel, p.noise, feature_operators(PointsSet{p.x.topRows(3)}, p.kernel, p.x), 20),
               DenseLimitExceeded);
}

TEST(Monotonicity, NestedInducingSets) {
  const auto p = make_problem(80, 15);
  const auto order = greedy_det_init(GramSource(p.kff), 15);
  double prev_elbo = -std::numeric_limits<double>::infinity(), prev_kl = std::numeric_limits<double>::infinity();
  for (Index m = 1; m <= 15; ++m) {
    const std::vector<Index> idx(order.begin(), order.begin() + m);
    const SparseApproximation approx(feature_operators(PointsSet{rows(p.x, idx)}, p.kernel, p.x));
    const double e = approx.elbo(p.y, p.noise);
    const double kl = KlEvaluator(p.kff, approx, p.noise)(p.y);
    EXPECT_GE(e, prev_elbo - 1e-8);
    EXPECT_LE(kl, prev_kl + 1e-8);
    prev_elbo = e;
    prev_kl = kl;
  }
}

TEST(Predict, PriorAndFarAway) {
  const auto k = KernelSpec::squared_exponential(1.7, 0.5);
  const MatrixXd z = sample_inputs(DensitySpec::gaussian(0.0, 1.0), 4, 3);
  const MatrixXd kuu = gram(k, z);
  VariationalSolution prior{VectorXd::Zero(4), kuu, 0.0, chol::factor(kuu)};
  const MatrixXd q = sample_inputs(DensitySpec::gaussian(0.0, 1.0), 6, 4);
  const auto pred = predict(prior, PointsSet{z}, k, q);
  EXPECT_LE(pred.mean.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LE((pred.variance.array() - 1.7).abs().maxCoeff(), 1e-10);

  const auto p = make_problem(30, 16, k);
  const InducingSet zs = PointsSet{p.x.topRows(5)};
  const auto sol = SparseApproximation(feature_operators(zs, k, p.x)).optimal_q(p.y, p.noise);
  const auto far = predict(sol, zs, k, MatrixXd::Constant(1, 1, 50.0));
  EXPECT_NEAR(far.mean(0), 0.0, 1e-10);
  EXPECT_NEAR(far.variance(0), 1.7, 1e-10);
}

TEST(GaussianKl, ScalarCases) {
  const MatrixXd one = MatrixXd::Identity(1, 1);
  const VectorXd zero = VectorXd::Zero(1), unit = VectorXd::Ones(1);
  EXPECT_NEAR(gaussian_kl(zero, one, zero, one), 0.0, 1e-15);
  EXPECT_NEAR(gaussian_kl(unit, one, zero, one), 0.5, 1e-15);
  EXPECT_NEAR(gaussian_kl(zero, 2.0 * one, zero, one), 0.5 * (2.0 - std::log(2.0) - 1.0), 1e-15);
  EXPECT_NEAR(gaussian_kl(zero, 2.0 * one, zero, one), 0.1534264097, 1e-9);
}

TEST(EigenfunctionFeatures, FirstFeatureUsesClosedFormEigenvalue) {
  const auto k = KernelSpec::squared_exponential(1.0, 0.6);
  const auto f = eigenfunction_features(k, DensitySpec::gaussian(0.0, 1.0), 1, 512);
  const auto p = make_problem(20, 17, k);
  const auto ops = feature_operators(f, k, p.x);
  EXPECT_NEAR(ops.Kuu(0, 0), se_gaussian_eigenvalues(1.0, 0.6, 1.0, 1)(0), 1e-14);
  EXPECT_GE(trace_gap(ops), 0.0);
}

TEST(EigenfunctionFeatures, EmpiricalDensityApproachesEigenvectorGap) {
  const auto k = KernelSpec::squared_exponential(1.0, 0.6);
  const auto p = make_problem(40, 18, k);
  const Index m = 6;
  const double t_vec = trace_gap(feature_operators(eigenvector_features(p.kff, p.x, m), k, p.x));
  const double t_fun = trace_gap(feature_operators(eigenfunction_features(k, DensitySpec::empirical(p.x), m, 48), k, p.x));
  EXPECT_NEAR(t_fun, t_vec, 1e-6 * std::max(1.0, t_vec));
}
