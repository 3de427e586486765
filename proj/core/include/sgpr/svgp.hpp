#pragma once

#include <functional>
#include <variant>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "sgpr/chol.hpp"
#include "sgpr/gp_exact.hpp"
#include "sgpr/kernels.hpp"

namespace sgpr {

/// Inducing inputs Z (one point per row).
struct PointsSet {
  Eigen::MatrixXd Z;
};

/// u_m = sum_i W_im f(x_i) for the top eigenvectors of K_ff on the inputs X
/// the features were built from.
struct EigenvectorFeatures {
  Eigen::VectorXd lambda;
  Eigen::MatrixXd W;
  Eigen::MatrixXd X;
};

/// u_m = int f(x) phi_m(x) p(x) dx. `phi` maps query rows to an N x M matrix.
struct EigenfunctionFeatures {
  Eigen::VectorXd lambda;
  std::function<Eigen::MatrixXd(const Eigen::Ref<const Eigen::MatrixXd>&)> phi;
  /// Weighted orthonormality error of phi reported by the basis that produced it.
  double orthonormality_error = 0.0;
};

using InducingSet = std::variant<PointsSet, EigenvectorFeatures, EigenfunctionFeatures>;

Index inducing_count(const InducingSet& inducing);

struct FeatureOperators {
  Eigen::MatrixXd Kuu;
  Eigen::MatrixXd Kuf;
  Eigen::VectorXd kff_diag;
};

/// Throws DimensionMismatch, DuplicateInducingPoint.
FeatureOperators feature_operators(const InducingSet& inducing, const KernelSpec& kernel,
                                   const Eigen::Ref<const Eigen::MatrixXd>& x);

/// cov(u, f(x*)) as an M x N* matrix.
Eigen::MatrixXd cross_covariance(const InducingSet& inducing, const KernelSpec& kernel,
                                 const Eigen::Ref<const Eigen::MatrixXd>& query);

struct VariationalSolution {
  Eigen::VectorXd mu;
  Eigen::MatrixXd Sigma;
  double elbo = 0.0;
  /// Factor of the (possibly jittered) Kuu the solution refers to.
  chol::LowerFactor kuu_factor;
};

struct Prediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

/// Precomputed M x M quantities shared by the ELBO, both upper bounds and the
/// optimal q(u): L_uu, V = L_uu^{-1} K_uf and P = V V^T. Every evaluation
/// runs through the Woodbury identity with an M x M factor, O(N M^2) overall.
class SparseApproximation {
 public:
  explicit SparseApproximation(const FeatureOperators& ops);

  Index num_data() const { return v_.cols(); }
  Index num_inducing() const { return v_.rows(); }
  const chol::LowerFactor& kuu_factor() const { return luu_; }
  double jitter_used() const { return luu_.jitter_used(); }
  const Eigen::MatrixXd& v() const { return v_; }
  const Eigen::MatrixXd& p() const { return p_; }
  const Eigen::VectorXd& kff_diag() const { return kff_diag_; }

  /// Tr(K_ff - Q_ff), clamped at 0; NumericalInconsistency below -1e-8 N v.
  double trace_gap() const { return t_; }

  /// y^T (Q_ff + s I)^{-1} y.
  double quad_form(const Eigen::Ref<const Eigen::VectorXd>& y, double s) const;
  /// log |Q_ff + s I|.
  double log_det(double s) const;

  double elbo(const Eigen::Ref<const Eigen::VectorXd>& y, const NoiseModel& noise) const;
  double upper_bound(const Eigen::Ref<const Eigen::VectorXd>& y, const NoiseModel& noise, double t) const;
  double refined_upper_bound(const Eigen::Ref<const Eigen::VectorXd>& y, const NoiseModel& noise,
                             double lambda_max) const;
  VariationalSolution optimal_q(const Eigen::Ref<const Eigen::VectorXd>& y, const NoiseModel& noise) const;

 private:
  chol::LowerFactor luu_;
  Eigen::MatrixXd v_;
  Eigen::MatrixXd p_;
  Eigen::VectorXd kff_diag_;
  double t_ = 0.0;
};

double trace_gap(const FeatureOperators& ops);
double trace_gap(const KernelSpec& kernel, const Eigen::Ref<const Eigen::MatrixXd>& x, const FeatureOperators& ops);

double elbo(const FeatureOperators& ops, const Eigen::Ref<const Eigen::VectorXd>& y, const NoiseModel& noise);
double upper_bound(const FeatureOperators& ops, const Eigen::Ref<const Eigen::VectorXd>& y, const NoiseModel& noise,
                   double t);
double refined_upper_bound(const FeatureOperators& ops, const Eigen::Ref<const Eigen::VectorXd>& y,
                           const NoiseModel& noise, double lambda_max);
VariationalSolution optimal_q(const FeatureOperators& ops, const Eigen::Ref<const Eigen::VectorXd>& y,
                              const NoiseModel& noise);

/// Expected log likelihood minus KL(q(u) || p(u)) for arbitrary (mu, Sigma).
double hensman_elbo(const SparseApproximation& approx, const Eigen::Ref<const Eigen::VectorXd>& y,
                    const NoiseModel& noise, const Eigen::Ref<const Eigen::VectorXd>& mu,
                    const Eigen::Ref<const Eigen::MatrixXd>& Sigma);

/// Largest eigenvalue of K_ff - Q_ff by power iteration from a fixed start
/// vector, stopped when the extrapolated Rayleigh-quotient error is below
/// tol relative. Result clamped to [0, t]. max_iter = 0 means 10 N.
double lambda_max_gap(const Eigen::Ref<const Eigen::MatrixXd>& kff, const SparseApproximation& approx,
                      double tol = 1e-6, Index max_iter = 0);
double lambda_max_gap(const KernelSpec& kernel, const Eigen::Ref<const Eigen::MatrixXd>& x,
                      const FeatureOperators& ops, double tol = 1e-6, Index max_iter = 0);

/// KL(q || p) between the optimal variational posterior and the exact
/// posterior for a fixed input set, evaluated directly rather than as the
/// difference of two log evidences. With K~ = K_ff - Q_ff, W = Q_n^{-1/2}
/// and B = W K~ W:
///   2 KL = sigma^{-2} tr(G^{-1} U^T K~ U) + [tr B - log|I + B|] + z^T B (I+B)^{-1} z
/// where U = V^T, G = sigma^2 I + U^T U and z = W y. Every term is a sum of
/// nonnegative pieces, so small divergences keep their relative accuracy.
/// The y-independent part is computed once; operator() costs O(N^2).
class KlEvaluator {
 public:
  KlEvaluator(const Eigen::Ref<const Eigen::MatrixXd>& kff, const SparseApproximation& approx,
              const NoiseModel& noise);

  double operator()(const Eigen::Ref<const Eigen::VectorXd>& y) const;
  /// The part of KL that does not depend on y.
  double y_independent() const { return 0.5 * (trace_term_ + logdet_term_); }

 private:
  double sigma_ = 1.0;
  Eigen::MatrixXd h_;   // U R
  Eigen::VectorXd g_;   // diagonal of W - sigma^{-1} I in the basis H
  Eigen::MatrixXd b_;   // W K~ W
  Eigen::LLT<Eigen::MatrixXd> ipb_;
  double trace_term_ = 0.0;
  double logdet_term_ = 0.0;
};

/// Dense O(N^3) exact KL; throws DenseLimitExceeded when N > dense_limit.
double kl_exact(const Dataset& data, const KernelSpec& kernel, const NoiseModel& noise, const FeatureOperators& ops,
                Index dense_limit = 5000);

/// Variational predictive marginals at the query rows. Throws NegativeVariance
/// when a variance falls below -1e-10 v; smaller negatives are clamped to 0.
Prediction predict(const VariationalSolution& sol, const InducingSet& inducing, const KernelSpec& kernel,
                   const Eigen::Ref<const Eigen::MatrixXd>& query);

/// KL(N(m1, S1) || N(m2, S2)).
double gaussian_kl(const Eigen::Ref<const Eigen::VectorXd>& m1, const Eigen::Ref<const Eigen::MatrixXd>& s1,
                   const Eigen::Ref<const Eigen::VectorXd>& m2, const Eigen::Ref<const Eigen::MatrixXd>& s2);

}  // namespace sgpr
