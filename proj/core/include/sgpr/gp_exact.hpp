#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "sgpr/chol.hpp"
#include "sgpr/kernels.hpp"

namespace sgpr {

struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;

  Index size() const { return X.rows(); }
  /// Throws DimensionMismatch / InvalidHyperparameter.
  void validate() const;
};

struct NoiseModel {
  double variance = 1.0;

  void validate() const;
};

struct Posterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

/// -1/2 y^T K_n^{-1} y - 1/2 log|K_n| - N/2 log(2 pi), K_n = K_ff + sigma^2 I.
double log_marginal_likelihood(const Dataset& data, const KernelSpec& kernel, const NoiseModel& noise);

/// Latent-function posterior at the query rows (zero prior mean).
Posterior posterior(const Dataset& data, const KernelSpec& kernel, const NoiseModel& noise,
                    const Eigen::Ref<const Eigen::MatrixXd>& query);

/// y ~ N(0, K_ff + sigma^2 I), deterministic in (seed, stream).
Eigen::VectorXd sample_prior_outputs(const Eigen::Ref<const Eigen::MatrixXd>& x, const KernelSpec& kernel,
                                     const NoiseModel& noise, std::uint64_t seed, std::uint64_t stream = 0);

/// Factorized K_n for repeated evaluation over many output vectors on one input set.
class ExactGp {
 public:
  ExactGp(const Eigen::Ref<const Eigen::MatrixXd>& x, const KernelSpec& kernel, const NoiseModel& noise);
  /// Reuses an already assembled K_ff.
  ExactGp(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::MatrixXd>& kff,
          const KernelSpec& kernel, const NoiseModel& noise);

  double log_marginal_likelihood(const Eigen::Ref<const Eigen::VectorXd>& y) const;
  Posterior posterior(const Eigen::Ref<const Eigen::VectorXd>& y, const Eigen::Ref<const Eigen::MatrixXd>& query) const;
  /// Marginal posterior mean and variance at the query rows.
  std::pair<Eigen::VectorXd, Eigen::VectorXd> marginals(const Eigen::Ref<const Eigen::VectorXd>& y,
                                                        const Eigen::Ref<const Eigen::MatrixXd>& query) const;
  /// Draws y from the prior predictive using this factor.
  Eigen::VectorXd sample(std::uint64_t seed, std::uint64_t stream = 0) const;

  const chol::LowerFactor& factor() const { return factor_; }
  double jitter_used() const { return factor_.jitter_used(); }

 private:
  Eigen::MatrixXd x_;
  KernelSpec kernel_;
  NoiseModel noise_;
  chol::LowerFactor factor_;
  double log_det_ = 0.0;
};

}  // namespace sgpr
