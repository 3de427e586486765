#pragma once

// Independent dense reference computations used by the tests. Nothing here
// calls into the library's factorization or bound code.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "sgpr/rng.hpp"

namespace sgpr::oracle {

using Eigen::Index;

inline Eigen::MatrixXd normal_matrix(CounterRng& rng, Index rows, Index cols) {
  Eigen::MatrixXd out(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) out(i, j) = rng.normal();
  return out;
}

inline Eigen::MatrixXd random_spd(CounterRng& rng, Index n, double ridge = 0.1) {
  const Eigen::MatrixXd a = normal_matrix(rng, n, n);
  Eigen::MatrixXd s = a * a.transpose();
  s.diagonal().array() += ridge;
  return 0.5 * (s + s.transpose());
}

inline Eigen::MatrixXd lower_factor(const Eigen::MatrixXd& a) { return Eigen::MatrixXd(a.llt().matrixL()); }

/// Determinant by Laplace expansion along the first row.
inline double cofactor_det(const Eigen::MatrixXd& a) {
  const Index n = a.rows();
  if (n == 1) return a(0, 0);
  double det = 0.0;
  for (Index j = 0; j < n; ++j) {
    Eigen::MatrixXd minor(n - 1, n - 1);
    for (Index r = 1; r < n; ++r)
      for (Index c = 0, k = 0; c < n; ++c)
        if (c != j) minor(r - 1, k++) = a(r, c);
    det += ((j % 2) ? -1.0 : 1.0) * a(0, j) * cofactor_det(minor);
  }
  return det;
}

/// Descending eigenvalues of a symmetric matrix.
inline Eigen::VectorXd eigenvalues_desc(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().reverse();
}

inline Eigen::MatrixXd principal(const Eigen::MatrixXd& a, const std::vector<Index>& idx) {
  const Index m = static_cast<Index>(idx.size());
  Eigen::MatrixXd out(m, m);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j) out(i, j) = a(idx[i], idx[j]);
  return out;
}

/// Q_ff = K_fS K_SS^{-1} K_Sf by a dense LU solve.
inline Eigen::MatrixXd nystrom(const Eigen::MatrixXd& kff, const std::vector<Index>& idx) {
  const Index n = kff.rows();
  const Index m = static_cast<Index>(idx.size());
  Eigen::MatrixXd ksf(m, n);
  for (Index a = 0; a < m; ++a) ksf.row(a) = kff.row(idx[a]);
  const Eigen::MatrixXd kss = principal(kff, idx);
  return ksf.transpose() * kss.fullPivLu().solve(ksf);
}

/// Multivariate normal log density via explicit inverse and determinant.
inline double mvn_logpdf(const Eigen::VectorXd& y, const Eigen::MatrixXd& cov) {
  const Index n = y.size();
  const Eigen::MatrixXd inv = cov.inverse();
  return -0.5 * y.dot(inv * y) - 0.5 * std::log(cov.determinant()) - 0.5 * n * std::log(2.0 * M_PI);
}

/// KL(N(m1, S1) || N(m2, S2)) with LU-based inverse and log-determinants.
inline double dense_kl(const Eigen::VectorXd& m1, const Eigen::MatrixXd& s1, const Eigen::VectorXd& m2,
                       const Eigen::MatrixXd& s2) {
  const Eigen::FullPivLU<Eigen::MatrixXd> lu2(s2);
  const Eigen::MatrixXd inv2 = lu2.inverse();
  const Eigen::VectorXd d = m2 - m1;
  const double logdet1 = Eigen::FullPivLU<Eigen::MatrixXd>(s1).matrixLU().diagonal().array().abs().log().sum();
  const double logdet2 = lu2.matrixLU().diagonal().array().abs().log().sum();
  return 0.5 * ((inv2 * s1).trace() + d.dot(inv2 * d) - static_cast<double>(m1.size()) + logdet2 - logdet1);
}

/// Dense squared-exponential Gram for 1-D inputs.
inline Eigen::MatrixXd se_gram(const Eigen::VectorXd& x, double v, double ell) {
  const Index n = x.size();
  Eigen::MatrixXd k(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) k(i, j) = v * std::exp(-0.5 * (x(i) - x(j)) * (x(i) - x(j)) / (ell * ell));
  return k;
}

/// All size-m subsets of {0..n-1} in lexicographic order.
inline std::vector<std::vector<Index>> subsets(Index n, Index m) {
  std::vector<std::vector<Index>> out;
  std::vector<Index> cur(static_cast<std::size_t>(m));
  std::iota(cur.begin(), cur.end(), Index{0});
  while (true) {
    out.push_back(cur);
    Index i = m - 1;
    while (i >= 0 && cur[i] == n - m + i) --i;
    if (i < 0) break;
    ++cur[i];
    for (Index j = i + 1; j < m; ++j) cur[j] = cur[j - 1] + 1;
  }
  return out;
}

}  // namespace sgpr::oracle
