#include "sgpr/svgp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

#include "sgpr/errors.hpp"
#include "sgpr/rng.hpp"

namespace sgpr {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

void check_duplicates(const Eigen::MatrixXd& z) {
  for (Index i = 0; i < z.rows(); ++i)
    for (Index j = i + 1; j < z.rows(); ++j)
      if (z.row(i) == z.row(j)) {
        throw DuplicateInducingPoint("inducing points " + std::to_string(i) + " and " + std::to_string(j) +
                                     " coincide");
      }
}

Eigen::LLT<Eigen::MatrixXd> woodbury_factor(const Eigen::MatrixXd& p, double s) {
  Eigen::MatrixXd b = p / s;
  b.diagonal().array() += 1.0;
  Eigen::LLT<Eigen::MatrixXd> llt(b);
  if (llt.info() != Eigen::Success) throw NotFactorizable("Woodbury system I + P/s is not positive definite");
  return llt;
}

double log_det_llt(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace

Index inducing_count(const InducingSet& inducing) {
  return std::visit(
      [](const auto& s) -> Index {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, PointsSet>) {
          return s.Z.rows();
        } else {
          return s.lambda.size();
        }
      },
      inducing);
}

FeatureOperators feature_operators(const InducingSet& inducing, const KernelSpec& kernel,
                                   const Eigen::Ref<const Eigen::MatrixXd>& x) {
  if (x.cols() != kernel.dim()) throw DimensionMismatch("feature_operators: input dimension differs from kernel");
  FeatureOperators ops;
  ops.kff_diag = gram_diagonal(kernel, x);
  if (auto* pts = std::get_if<PointsSet>(&inducing)) {
    if (pts->Z.rows() > 0 && pts->Z.cols() != x.cols()) {
      throw DimensionMismatch("feature_operators: inducing point dimension differs from inputs");
    }
    check_duplicates(pts->Z);
    if (pts->Z.rows() == 0) {
      ops.Kuu.resize(0, 0);
      ops.Kuf.resize(0, x.rows());
    } else {
      ops.Kuu = gram(kernel, pts->Z);
      ops.Kuf = gram(kernel, pts->Z, x);
    }
  } else if (auto* ev = std::get_if<EigenvectorFeatures>(&inducing)) {
    if (ev->W.rows() != x.rows() || ev->W.cols() != ev->lambda.size()) {
      throw DimensionMismatch("feature_operators: eigenvector features do not match the inputs");
    }
    ops.Kuu = ev->lambda.asDiagonal();
    ops.Kuf = ev->lambda.asDiagonal() * ev->W.transpose();
  } else {
    const auto& ef = std::get<EigenfunctionFeatures>(inducing);
    const Eigen::MatrixXd phi = ef.phi(x);
    if (phi.rows() != x.rows() || phi.cols() != ef.lambda.size()) {
      throw DimensionMismatch("feature_operators: eigenfunction evaluator returned the wrong shape");
    }
    ops.Kuu = ef.lambda.asDiagonal();
    ops.Kuf = ef.lambda.asDiagonal() * phi.transpose();
  }
  return ops;
}

Eigen::MatrixXd cross_covariance(const InducingSet& inducing, const KernelSpec& kernel,
                                 const Eigen::Ref<const Eigen::MatrixXd>& query) {
  if (auto* pts = std::get_if<PointsSet>(&inducing)) {
    if (pts->Z.rows() == 0) return Eigen::MatrixXd(0, query.rows());
    return gram(kernel, pts->Z, query);
  }
  if (auto* ev = std::get_if<EigenvectorFeatures>(&inducing)) {
    return ev->W.transpose() * gram(kernel, ev->X, query);
  }
  const auto& ef = std::get<EigenfunctionFeatures>(inducing);
  return ef.lambda.asDiagonal() * ef.phi(query).transpose();
}

SparseApproximation::SparseApproximation(const FeatureOperators& ops) : kff_diag_(ops.kff_diag) {
  const Index m = ops.Kuu.rows();
  const Index n = ops.Kuf.cols();
  if (ops.Kuu.cols() != m || ops.Kuf.rows() != m || kff_diag_.size() != n) {
    throw DimensionMismatch("SparseApproximation: inconsistent operator shapes");
  }
  luu_ = chol::factor(ops.Kuu);
  v_ = m > 0 ? luu_.solve_lower(ops.Kuf) : Eigen::MatrixXd(0, n);
  p_ = Eigen::MatrixXd::Zero(m, m);
  p_.selfadjointView<Eigen::Lower>().rankUpdate(v_);
  p_ = p_.selfadjointView<Eigen::Lower>();

  const double raw = kff_diag_.sum() - v_.squaredNorm();
  const double scale = n > 0 ? kff_diag_.maxCoeff() : 1.0;
  if (raw < -1e-8 * static_cast<double>(n) * scale) {
    throw NumericalInconsistency("trace gap " + std::to_string(raw) + " is negative beyond round-off");
  }
  t_ = std::max(raw, 0.0);
}

double SparseApproximation::quad_form(const Eigen::Ref<const Eigen::VectorXd>& y, double s) const {
  if (y.size() != num_data()) throw DimensionMismatch("quad_form: y length differs from N");
  if (num_inducing() == 0) return y.squaredNorm() / s;
  const auto llt = woodbury_factor(p_, s);
  Eigen::VectorXd r = v_ * y;
  llt.matrixL().solveInPlace(r);
  return (y.squaredNorm() - r.squaredNorm() / s) / s;
}

double SparseApproximation::log_det(double s) const {
  const double n = static_cast<double>(num_data());
  if (num_inducing() == 0) return n * std::log(s);
  return n * std::log(s) + log_det_llt(woodbury_factor(p_, s));
}

double SparseApproximation::elbo(const Eigen::Ref<const Eigen::VectorXd>& y, const NoiseModel& noise) const {
  noise.validate();
  const double s = noise.variance;
  const double n = static_cast<double>(num_data());
  return -0.5 * quad_form(y, s) - 0.5 * log_det(s) - 0.5 * n * kLog2Pi - t_ / (2.0 * s);
}

double SparseApproximation::upper_bound(const Eigen::Ref<const Eigen::VectorXd>& y, const NoiseModel& noise,
                                        double t) const {
  noise.validate();
  const double n = static_cast<double>(num_data());
  return -0.5 * quad_form(y, noise.variance + t) - 0.5 * log_det(noise.variance) - 0.5 * n * kLog2Pi;
}

double SparseApproximation::refined_upper_bound(const Eigen::Ref<const Eigen::VectorXd>& y, const NoiseModel& noise,
                                                double lambda_max) const {
  return upper_bound(y, noise, lambda_max);
}

VariationalSolution SparseApproximation::optimal_q(const Eigen::Ref<const Eigen::VectorXd>& y,
                                                   const NoiseModel& noise) const {
  noise.validate();
  if (y.size() != num_data()) throw DimensionMismatch("optimal_q: y length differs from N");
  const Index m = num_inducing();
  VariationalSolution sol;
  sol.kuu_factor = luu_;
  sol.elbo = elbo(y, noise);
  if (m == 0) {
    sol.mu.resize(0);
    sol.Sigma.resize(0, 0);
    return sol;
  }
  // Sigma = L B^{-1} L^T, mu = sigma^{-2} L B^{-1} V y with B = I + P / sigma^2.
  const auto llt = woodbury_factor(p_, noise.variance);
  const auto l = luu_.matrix().triangularView<Eigen::Lower>();
  sol.mu = l * llt.solve(v_ * y) / noise.variance;
  Eigen::MatrixXd c = llt.matrixL().solve(Eigen::MatrixXd(luu_.matrix().transpose()));
  sol.Sigma = c.transpose() * c;
  sol.Sigma = 0.5 * (sol.Sigma + sol.Sigma.transpose());
  return sol;
}

double trace_gap(const FeatureOperators& ops) { return SparseApproximation(ops).trace_gap(); }

double trace_gap(const KernelSpec& kernel, const Eigen::Ref<const Eigen::MatrixXd>& x, const FeatureOperators& ops) {
  if (x.rows() != ops.Kuf.cols()) throw DimensionMismatch("trace_gap: inputs do not match the operators");
  FeatureOperators copy = ops;
  copy.kff_diag = gram_diagonal(kernel, x);
  return SparseApproximation(copy).trace_gap();
}

double elbo(const FeatureOperators& ops, const Eigen::Ref<const Eigen::VectorXd>& y, const NoiseModel& noise) {
  return SparseApproximation(ops).elbo(y, noise);
}

double upper_bound(const FeatureOperators& ops, const Eigen::Ref<const Eigen::VectorXd>& y, const NoiseModel& noise,
                   double t) {
  return SparseApproximation(ops).upper_bound(y, noise, t);
}

double refined_upper_bound(const FeatureOperators& ops, const Eigen::Ref<const Eigen::VectorXd>& y,
                           const NoiseModel& noise, double lambda_max) {
  return SparseApproximation(ops).refined_upper_bound(y, noise, lambda_max);
}

VariationalSolution optimal_q(const FeatureOperators& ops, const Eigen::Ref<const Eigen::VectorXd>& y,
                              const NoiseModel& noise) {
  return SparseApproximation(ops).optimal_q(y, noise);
}

double hensman_elbo(const SparseApproximation& approx, const Eigen::Ref<const Eigen::VectorXd>& y,
                    const NoiseModel& noise, const Eigen::Ref<const Eigen::VectorXd>& mu,
                    const Eigen::Ref<const Eigen::MatrixXd>& Sigma) {
  noise.validate();
  const Index m = approx.num_inducing();
  if (mu.size() != m || Sigma.rows() != m || Sigma.cols() != m) {
    throw DimensionMismatch("hensman_elbo: q(u) parameters do not match M");
  }
  const auto& luu = approx.kuu_factor();
  // A = Kuu^{-1} Kuf = L^{-T} V.
  Eigen::MatrixXd a = approx.v();
  luu.matrix().triangularView<Eigen::Lower>().transpose().solveInPlace(a);
  const Eigen::VectorXd mean = a.transpose() * mu;
  const Eigen::VectorXd var = approx.kff_diag() - approx.v().colwise().squaredNorm().transpose() +
                              (a.array() * (Sigma * a).array()).colwise().sum().transpose().matrix();
  const double s = noise.variance;
  const double n = static_cast<double>(y.size());
  const double expected = -0.5 * n * (kLog2Pi + std::log(s)) - ((y - mean).squaredNorm() + var.sum()) / (2.0 * s);
  return expected - gaussian_kl(mu, Sigma, Eigen::VectorXd::Zero(m), luu.reconstruct());
}

double lambda_max_gap(const Eigen::Ref<const Eigen::MatrixXd>& kff, const SparseApproximation& approx, double tol,
                      Index max_iter) {
  const Index n = approx.num_data();
  if (kff.rows() != n || kff.cols() != n) throw DimensionMismatch("lambda_max_gap: K_ff shape differs from N");
  if (!(tol > 0.0)) throw InvalidHyperparameter("lambda_max_gap: tolerance must be positive");
  const double t = approx.trace_gap();
  const double scale = approx.kff_diag().size() ? approx.kff_diag().maxCoeff() : 1.0;
  if (t <= 1e-14 * static_cast<double>(n) * scale) return 0.0;
  if (max_iter <= 0) max_iter = 10 * n;

  const auto& v = approx.v();
  auto apply = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    Eigen::VectorXd out = kff.selfadjointView<Eigen::Lower>() * x;
    if (v.rows() > 0) out.noalias() -= v.transpose() * (v * x);
    return out;
  };

  CounterRng rng(0x5eed, 0x1a3b);
  Eigen::VectorXd x(n);
  for (Index i = 0; i < n; ++i) x(i) = rng.normal();
  x.normalize();
  Eigen::VectorXd kx = apply(x);
  double rho = x.dot(kx);
  double prev_delta = -1.0;
  for (Index it = 0; it < max_iter; ++it) {
    const double norm = kx.norm();
    if (norm == 0.0) return 0.0;
    x = kx / norm;
    kx = apply(x);
    const double next = x.dot(kx);
    const double delta = std::abs(next - rho);
    rho = next;
    if (delta <= 1e-15 * std::abs(rho)) return std::clamp(rho, 0.0, t);
    if (prev_delta > 0.0) {
      const double ratio = delta / prev_delta;
      if (ratio < 1.0) {
        const double remaining = delta * ratio / (1.0 - ratio);
        if (remaining <= 0.1 * tol * std::abs(rho)) return std::clamp(rho, 0.0, t);
      }
    }
    prev_delta = delta;
  }
  throw NoConvergence("lambda_max_gap: power iteration did not converge in " + std::to_string(max_iter) +
                      " iterations");
}

double lambda_max_gap(const KernelSpec& kernel, const Eigen::Ref<const Eigen::MatrixXd>& x,
                      const FeatureOperators& ops, double tol, Index max_iter) {
  FeatureOperators copy = ops;
  copy.kff_diag = gram_diagonal(kernel, x);
  return lambda_max_gap(gram(kernel, x), SparseApproximation(copy), tol, max_iter);
}

KlEvaluator::KlEvaluator(const Eigen::Ref<const Eigen::MatrixXd>& kff, const SparseApproximation& approx,
                         const NoiseModel& noise) {
  noise.validate();
  const Index n = approx.num_data();
  const Index m = approx.num_inducing();
  if (kff.rows() != n || kff.cols() != n) throw DimensionMismatch("KlEvaluator: K_ff shape differs from N");
  sigma_ = std::sqrt(noise.variance);
  const double s2 = noise.variance;

  // K~ = K_ff - V^T V, lower triangle only until symmetrized.
  Eigen::MatrixXd ktilde = kff;
  if (m > 0) {
    ktilde.selfadjointView<Eigen::Lower>().rankUpdate(approx.v().transpose(), -1.0);
  }
  ktilde.triangularView<Eigen::StrictlyUpper>() = ktilde.transpose();

  // Q_n^{-1/2} = sigma^{-1} I + H diag(g) H^T with U^T U = R diag(lam) R^T, H = U R and
  // g = (sigma^2 + lam)^{-1/2} - sigma^{-1} written without cancellation.
  Eigen::MatrixXd s_mat;
  Eigen::VectorXd lam;
  if (m > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(approx.p());
    if (eig.info() != Eigen::Success) throw EigenFailure("KlEvaluator: eigendecomposition of V V^T failed");
    lam = eig.eigenvalues().cwiseMax(0.0);
    h_ = approx.v().transpose() * eig.eigenvectors();
    g_.resize(m);
    for (Index k = 0; k < m; ++k) {
      const double root = std::sqrt(s2 + lam(k));
      g_(k) = -1.0 / (sigma_ * root * (sigma_ + root));
    }
    const Eigen::MatrixXd tk = ktilde * h_;  // K~ H
    s_mat = h_.transpose() * tk;              // H^T K~ H
    s_mat = 0.5 * (s_mat + s_mat.transpose());
    // B = sigma^{-2} K~ + Y H^T + H Y^T with Y = sigma^{-1} K~ H D + 1/2 H D S D.
    const Eigen::MatrixXd y = tk * g_.asDiagonal() / sigma_ +
                              0.5 * h_ * (g_.asDiagonal() * s_mat * g_.asDiagonal());
    b_ = ktilde / s2;
    b_.noalias() += y * h_.transpose();
    b_.noalias() += h_ * y.transpose();
    b_ = 0.5 * (b_ + b_.transpose());
    trace_term_ = 0.0;
    for (Index k = 0; k < m; ++k) trace_term_ += s_mat(k, k) / (s2 + lam(k));
    trace_term_ /= s2;
  } else {
    h_.resize(n, 0);
    g_.resize(0);
    b_ = ktilde / s2;
    trace_term_ = 0.0;
  }
  ktilde.resize(0, 0);

  Eigen::MatrixXd ipb = b_;
  ipb.diagonal().array() += 1.0;
  ipb_.compute(ipb);
  if (ipb_.info() != Eigen::Success) throw NotFactorizable("KlEvaluator: I + B is not positive definite");

  // tr B - log|I + B| = sum_i [ sum_{k<i} L_ik^2 + e_i - log1p(e_i) ], e_i = L_ii^2 - 1.
  const Eigen::MatrixXd& l = ipb_.matrixLLT();
  double acc = 0.0;
  for (Index j = 0; j < n; ++j) {
    const double d = l(j, j);
    const double e = (d - 1.0) * (d + 1.0);
    acc += (e - std::log1p(e)) + l.col(j).tail(n - j - 1).squaredNorm();
  }
  logdet_term_ = acc;
}

double KlEvaluator::operator()(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  if (y.size() != b_.rows()) throw DimensionMismatch("KlEvaluator: y length differs from N");
  Eigen::VectorXd z = y / sigma_;
  if (h_.cols() > 0) z.noalias() += h_ * (g_.asDiagonal() * (h_.transpose() * y));
  const Eigen::VectorXd bz = b_ * z;
  const Eigen::VectorXd w = ipb_.solve(z);
  const double quad = std::max(bz.dot(w), 0.0);
  return 0.5 * (trace_term_ + logdet_term_ + quad);
}

double kl_exact(const Dataset& data, const KernelSpec& kernel, const NoiseModel& noise, const FeatureOperators& ops,
                Index dense_limit) {
  data.validate();
  if (data.size() > dense_limit) {
    throw DenseLimitExceeded("kl_exact: N = " + std::to_string(data.size()) + " exceeds dense limit " +
                             std::to_string(dense_limit));
  }
  SparseApproximation approx(ops);
  if (approx.num_data() != data.size()) throw DimensionMismatch("kl_exact: operators do not match the dataset");
  const Eigen::MatrixXd kff = gram(kernel, data.X);
  return KlEvaluator(kff, approx, noise)(data.y);
}

Prediction predict(const VariationalSolution& sol, const InducingSet& inducing, const KernelSpec& kernel,
                   const Eigen::Ref<const Eigen::MatrixXd>& query) {
  const Index m = sol.mu.size();
  if (sol.kuu_factor.dim() != m || sol.Sigma.rows() != m || inducing_count(inducing) != m) {
    throw DimensionMismatch("predict: solution and inducing set sizes differ");
  }
  Prediction out;
  const Eigen::VectorXd prior = gram_diagonal(kernel, query);
  if (m == 0) {
    out.mean = Eigen::VectorXd::Zero(query.rows());
    out.variance = prior;
    return out;
  }
  const auto l = sol.kuu_factor.matrix().triangularView<Eigen::Lower>();
  const Eigen::MatrixXd vs = l.solve(cross_covariance(inducing, kernel, query));  // L^{-1} k_u*
  const Eigen::VectorXd lmu = l.solve(sol.mu);
  Eigen::MatrixXd sig_hat = l.solve(sol.Sigma);
  sig_hat = l.solve(Eigen::MatrixXd(sig_hat.transpose()));  // L^{-1} Sigma L^{-T}
  out.mean = vs.transpose() * lmu;
  out.variance = prior - vs.colwise().squaredNorm().transpose() +
                 (vs.array() * (sig_hat * vs).array()).colwise().sum().transpose().matrix();
  const double floor = -1e-10 * kernel.variance;
  for (Index i = 0; i < out.variance.size(); ++i) {
    if (out.variance(i) < floor) {
      throw NegativeVariance("predict: variance " + std::to_string(out.variance(i)) + " at query " +
                             std::to_string(i));
    }
    out.variance(i) = std::max(out.variance(i), 0.0);
  }
  return out;
}

double gaussian_kl(const Eigen::Ref<const Eigen::VectorXd>& m1, const Eigen::Ref<const Eigen::MatrixXd>& s1,
                   const Eigen::Ref<const Eigen::VectorXd>& m2, const Eigen::Ref<const Eigen::MatrixXd>& s2) {
  const Index k = m1.size();
  if (m2.size() != k || s1.rows() != k || s1.cols() != k || s2.rows() != k || s2.cols() != k) {
    throw DimensionMismatch("gaussian_kl: dimension mismatch");
  }
  if (k == 0) return 0.0;
  const double none[] = {0.0};
  const auto l1 = chol::factor(s1, none);
  const auto l2 = chol::factor(s2, none);
  const Eigen::MatrixXd a = l2.solve_lower(l1.matrix());
  const Eigen::VectorXd d = l2.solve_lower(m2 - m1);
  const double value =
      0.5 * (a.squaredNorm() + d.squaredNorm() - static_cast<double>(k) + chol::log_det(l2) - chol::log_det(l1));
  return std::max(value, 0.0);
}

}  // namespace sgpr
