#include "sgpr/harness/oracle_suite.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "sgpr/bounds.hpp"
#include "sgpr/chol.hpp"
#include "sgpr/errors.hpp"
#include "sgpr/gp_exact.hpp"
#include "sgpr/inducing.hpp"
#include "sgpr/rng.hpp"
#include "sgpr/spectrum.hpp"
#include "sgpr/svgp.hpp"

namespace sgpr::harness {

namespace {

Eigen::MatrixXd random_normal(CounterRng& rng, Index rows, Index cols) {
  Eigen::MatrixXd out(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) out(i, j) = rng.normal();
  return out;
}

Eigen::MatrixXd random_spd(CounterRng& rng, Index n) {
  const Eigen::MatrixXd a = random_normal(rng, n, n);
  Eigen::MatrixXd s = a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
  return 0.5 * (s + s.transpose());
}

Eigen::MatrixXd dense_lower(const Eigen::MatrixXd& a) {
  return Eigen::MatrixXd(a.llt().matrixL());
}

Eigen::MatrixXd drop(const Eigen::MatrixXd& a, Index k) {
  const Index n = a.rows();
  Eigen::MatrixXd out(n - 1, n - 1);
  for (Index i = 0, r = 0; i < n; ++i) {
    if (i == k) continue;
    for (Index j = 0, c = 0; j < n; ++j) {
      if (j == k) continue;
      out(r, c++) = a(i, j);
    }
    ++r;
  }
  return out;
}

std::string sci(double x) {
  std::ostringstream s;
  s.precision(3);
  s << std::scientific << x;
  return s.str();
}

OracleResult check_chol(CounterRng& rng) {
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::MatrixXd a = random_spd(rng, 5);
    const chol::LowerFactor f = chol::factor(a);
    const Eigen::VectorXd v = random_normal(rng, 5, 1);
    const Eigen::MatrixXd upd = a + v * v.transpose();
    worst = std::max(worst, (chol::rank_one_update(f, v).matrix() - dense_lower(upd)).cwiseAbs().maxCoeff());

    const Index k = static_cast<Index>(rng.below(5));
    worst = std::max(worst, (chol::remove_index(f, k).matrix() - dense_lower(drop(a, k))).cwiseAbs().maxCoeff());

    const Eigen::MatrixXd big = random_spd(rng, 6);
    const chol::LowerFactor head = chol::factor(big.topLeftCorner(5, 5));
    const auto ext = chol::append_index(head, big.col(5).head(5), big(5, 5));
    worst = std::max(worst, (ext.matrix() - dense_lower(big)).cwiseAbs().maxCoeff());

    worst = std::max(worst, std::abs(chol::log_det(f) - std::log(a.determinant())));
  }
  return {"chol refactorization", worst <= 1e-10, "max entry error " + sci(worst)};
}

OracleResult check_lemma3(CounterRng& rng) {
  int violations = 0;
  double worst_ratio = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::MatrixXd k = random_spd(rng, 8);
    const KdppTable table = exact_kdpp_enumeration(k, 3);
    double expected_t = 0.0;
    for (std::size_t s = 0; s < table.subsets.size(); ++s) {
      const auto& idx = table.subsets[s];
      Eigen::MatrixXd kss(3, 3), ksf(3, 8);
      for (Index a = 0; a < 3; ++a) {
        for (Index b = 0; b < 3; ++b) kss(a, b) = k(idx[a], idx[b]);
        ksf.row(a) = k.row(idx[a]);
      }
      const Eigen::MatrixXd q = ksf.transpose() * kss.ldlt().solve(ksf);
      expected_t += table.probabilities[s] * (k.trace() - q.trace());
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd lam = eig.eigenvalues().reverse();
    const double bound = nystrom_trace_bound(lam.tail(5).sum(), 3, 8, 0.0, 0.0);
    if (expected_t > bound * (1.0 + 1e-12)) ++violations;
    worst_ratio = std::max(worst_ratio, expected_t / bound);
  }
  return {"lemma3 exact expectation", violations == 0,
          std::to_string(violations) + " violations, max E[t]/bound " + sci(worst_ratio)};
}

OracleResult check_chain(std::uint64_t seed) {
  CounterRng rng(seed, 77);
  Eigen::MatrixXd x(10, 1);
  for (Index i = 0; i < 10; ++i) x(i, 0) = 3.0 * rng.uniform();
  const KernelSpec kernel = KernelSpec::squared_exponential(1.0, 0.5);
  const Eigen::MatrixXd kff = gram(kernel, x);
  const KdppTable table = exact_kdpp_enumeration(kff, 3);
  const GramSource source(kff);
  KdppChain chain(source, greedy_det_init(source, 3), seed, 78);
  std::vector<double> counts(table.subsets.size(), 0.0);
  const std::uint64_t steps = 1000000;
  std::vector<Index> sorted(3);
  chain.run(steps, [&](std::uint64_t, std::span<const Index> members) {
    std::copy(members.begin(), members.end(), sorted.begin());
    std::sort(sorted.begin(), sorted.end());
    counts[table.rank(sorted)] += 1.0;
  });
  double tv = 0.0;
  for (std::size_t s = 0; s < counts.size(); ++s) tv += std::abs(counts[s] / steps - table.probabilities[s]);
  tv *= 0.5;
  return {"k-dpp chain vs enumeration", tv <= 0.05, "total variation " + sci(tv)};
}

OracleResult check_scalars() {
  const auto c = se_gaussian_constants(std::sqrt(0.5), 0.5);
  const double lam1 = se_gaussian_eigenvalues(1.0, std::sqrt(0.5), 0.5, 1)(0);
  double err = std::abs(c.a - 1.0) + std::abs(c.b - 1.0) + std::abs(c.c - std::sqrt(3.0)) +
               std::abs(c.A - (2.0 + std::sqrt(3.0))) + std::abs(c.B - (2.0 - std::sqrt(3.0))) +
               std::abs(lam1 - std::sqrt(2.0 / (2.0 + std::sqrt(3.0))));
  // Tail against a long partial sum plus its geometric remainder.
  const Eigen::VectorXd lam = se_gaussian_eigenvalues(1.0, std::sqrt(0.5), 0.5, 200);
  const double partial = lam.tail(195).sum();
  const double tail = se_gaussian_tail(1.0, std::sqrt(0.5), 0.5, 5);
  err = std::max(err, std::abs(tail - partial) / partial);
  const auto l1 = lemma1(1.0, 0.5, 4.0, 1.0);
  err = std::max(err, std::abs(l1.tight - (1.0 + 0.5 * 4.0 / 1.5) / 2.0));
  err = std::max(err, std::abs(l1.loose - (1.0 + 4.0 / 2.0) / 2.0));
  return {"scalar closed forms", err <= 1e-10, "max error " + sci(err)};
}

OracleResult check_identity(std::uint64_t seed) {
  double worst = 0.0, worst_dense = 0.0;
  int order_violations = 0;
  for (int rep = 0; rep < 10; ++rep) {
    const Eigen::MatrixXd x = sample_inputs(DensitySpec::gaussian(0.0, 1.0), 50, seed, 100 + rep);
    const KernelSpec kernel = rep % 3 == 0   ? KernelSpec::squared_exponential(1.0, 0.6)
                              : rep % 3 == 1 ? KernelSpec::matern(1, 1.0, 0.6)
                                             : KernelSpec::matern(0, 1.0, 0.6);
    const NoiseModel noise{0.5};
    const Eigen::MatrixXd kff = gram(kernel, x);
    const ExactGp exact(x, kff, kernel, noise);
    const Eigen::VectorXd y = exact.sample(seed, 200 + rep);
    const auto idx = uniform_subset(50, 5 + rep, seed + rep);
    Eigen::MatrixXd z(static_cast<Index>(idx.size()), 1);
    for (std::size_t k = 0; k < idx.size(); ++k) z(static_cast<Index>(k), 0) = x(idx[k], 0);
    const InducingSet inducing = PointsSet{z};
    const auto ops = feature_operators(inducing, kernel, x);
    const SparseApproximation approx(ops);
    const double L = exact.log_marginal_likelihood(y);
    const double e = approx.elbo(y, noise);
    const double kl = KlEvaluator(kff, approx, noise)(y);

    // Z is a subset of X, so u is a coordinate of f and the joint KL reduces to
    // the KL between q(f) = N(A mu, Kff - Qff + A Sigma A^T) and p(f | y).
    // Only the Matern-1/2 Gram is conditioned well enough for a dense check.
    if (rep % 3 == 2) {
      const auto sol = approx.optimal_q(y, noise);
      const Eigen::MatrixXd a = sol.kuu_factor.solve(ops.Kuf).transpose();
      Eigen::MatrixXd sq = kff - a * ops.Kuf + a * sol.Sigma * a.transpose();
      Eigen::MatrixXd kn = kff;
      kn.diagonal().array() += noise.variance;
      const Eigen::LLT<Eigen::MatrixXd> kn_llt(kn);
      Eigen::MatrixXd sp = noise.variance * kn_llt.solve(kff);
      const Eigen::VectorXd mp = kff * kn_llt.solve(y);
      sq = 0.5 * (sq + sq.transpose()).eval();
      sp = 0.5 * (sp + sp.transpose()).eval();
      const double kl_dense = gaussian_kl(a * sol.mu, sq, mp, sp);
      worst_dense = std::max(worst_dense, std::abs(kl_dense - kl) / std::max(kl, 1e-300));
    }

    worst = std::max(worst, std::abs((L - e) - kl) / std::max(1.0, std::abs(L)));
    const double t = approx.trace_gap();
    const double lam = lambda_max_gap(kff, approx);
    const double up = approx.upper_bound(y, noise, t);
    const double upr = approx.refined_upper_bound(y, noise, lam);
    const double tol = 1e-8 * std::max(1.0, std::abs(L));
    if (e > L + tol || L > upr + tol || upr > up + tol || kl < -1e-12) ++order_violations;
  }
  return {"elbo identity and sandwich", worst <= 1e-8 && worst_dense <= 1e-6 && order_violations == 0,
          "max relative identity error " + sci(worst) + ", dense joint kl error " + sci(worst_dense) + ", " +
              std::to_string(order_violations) + " ordering violations"};
}

OracleResult check_eigvec(std::uint64_t seed) {
  const Eigen::MatrixXd x = sample_inputs(DensitySpec::gaussian(0.0, 1.0), 120, seed, 300);
  const KernelSpec kernel = KernelSpec::squared_exponential(1.0, 0.6);
  const Eigen::MatrixXd kff = gram(kernel, x);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(kff, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd lam = eig.eigenvalues().reverse();
  double worst = 0.0;
  for (Index m : {1, 5, 10}) {
    const InducingSet inducing = eigenvector_features(kff, x, m);
    const SparseApproximation approx(feature_operators(inducing, kernel, x));
    const double want_t = lam.tail(120 - m).sum();
    worst = std::max(worst, std::abs(approx.trace_gap() - want_t) / want_t);
    worst = std::max(worst, std::abs(lambda_max_gap(kff, approx) - lam(m)) / lam(m));
  }
  return {"eigenvector features vs dense eig", worst <= 1e-6, "max relative error " + sci(worst)};
}

}  // namespace

std::vector<OracleResult> run_oracle_suite(std::uint64_t seed) {
  std::vector<OracleResult> out;
  auto guard = [&](const std::string& name, auto&& fn) {
    try {
      out.push_back(fn());
    } catch (const std::exception& e) {
      out.push_back({name, false, std::string("exception: ") + e.what()});
    }
  };
  CounterRng rng(seed, 0x0c1e);
  guard("chol refactorization", [&] { return check_chol(rng); });
  guard("scalar closed forms", [&] { return check_scalars(); });
  guard("elbo identity and sandwich", [&] { return check_identity(seed); });
  guard("eigenvector features vs dense eig", [&] { return check_eigvec(seed); });
  guard("lemma3 exact expectation", [&] { return check_lemma3(rng); });
  guard("k-dpp chain vs enumeration", [&] { return check_chain(seed); });
  return out;
}

}  // namespace sgpr::harness
