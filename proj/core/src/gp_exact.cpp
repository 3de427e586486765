#include "sgpr/gp_exact.hpp"

#include <cmath>
#include <numbers>

#include "sgpr/errors.hpp"
#include "sgpr/rng.hpp"

namespace sgpr {

void Dataset::validate() const {
  if (X.rows() < 1) throw DimensionMismatch("dataset must contain at least one point");
  if (y.size() != X.rows()) throw DimensionMismatch("dataset: X and y row counts differ");
  if (!X.allFinite() || !y.allFinite()) throw InvalidHyperparameter("dataset contains non-finite entries");
}

void NoiseModel::validate() const {
  if (!(variance > 0.0) || !std::isfinite(variance)) throw InvalidHyperparameter("noise variance must be positive");
}

ExactGp::ExactGp(const Eigen::Ref<const Eigen::MatrixXd>& x, const KernelSpec& kernel, const NoiseModel& noise)
    : ExactGp(x, gram(kernel, x), kernel, noise) {}

ExactGp::ExactGp(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::MatrixXd>& kff,
                 const KernelSpec& kernel, const NoiseModel& noise)
    : x_(x), kernel_(kernel), noise_(noise) {
  noise_.validate();
  kernel_.validate();
  if (kff.rows() != x.rows() || kff.cols() != x.rows()) throw DimensionMismatch("ExactGp: K_ff shape differs from inputs");
  Eigen::MatrixXd kn = kff;
  kn.diagonal().array() += noise_.variance;
  factor_ = chol::factor(kn);
  log_det_ = chol::log_det(factor_);
}

double ExactGp::log_marginal_likelihood(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  if (y.size() != x_.rows()) throw DimensionMismatch("log_marginal_likelihood: y length differs from N");
  const Eigen::VectorXd alpha = factor_.solve_lower(y);
  const double n = static_cast<double>(y.size());
  return -0.5 * alpha.squaredNorm() - 0.5 * log_det_ - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

Posterior ExactGp::posterior(const Eigen::Ref<const Eigen::VectorXd>& y,
                             const Eigen::Ref<const Eigen::MatrixXd>& query) const {
  if (y.size() != x_.rows()) throw DimensionMismatch("posterior: y length differs from N");
  const Eigen::MatrixXd kxs = gram(kernel_, x_, query);
  const Eigen::MatrixXd a = factor_.solve_lower(kxs);
  Posterior p;
  p.mean = kxs.transpose() * factor_.solve(y);
  p.covariance = gram(kernel_, query) - a.transpose() * a;
  p.covariance = 0.5 * (p.covariance + p.covariance.transpose());
  return p;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> ExactGp::marginals(const Eigen::Ref<const Eigen::VectorXd>& y,
                                                               const Eigen::Ref<const Eigen::MatrixXd>& query) const {
  if (y.size() != x_.rows()) throw DimensionMismatch("marginals: y length differs from N");
  const Eigen::MatrixXd kxs = gram(kernel_, x_, query);
  const Eigen::MatrixXd a = factor_.solve_lower(kxs);
  Eigen::VectorXd mean = kxs.transpose() * factor_.solve(y);
  Eigen::VectorXd var = gram_diagonal(kernel_, query) - a.colwise().squaredNorm().transpose();
  return {std::move(mean), std::move(var)};
}

Eigen::VectorXd ExactGp::sample(std::uint64_t seed, std::uint64_t stream) const {
  CounterRng rng(seed, stream);
  Eigen::VectorXd z(x_.rows());
  for (Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return factor_.matrix().triangularView<Eigen::Lower>() * z;
}

double log_marginal_likelihood(const Dataset& data, const KernelSpec& kernel, const NoiseModel& noise) {
  data.validate();
  return ExactGp(data.X, kernel, noise).log_marginal_likelihood(data.y);
}

Posterior posterior(const Dataset& data, const KernelSpec& kernel, const NoiseModel& noise,
                    const Eigen::Ref<const Eigen::MatrixXd>& query) {
  data.validate();
  if (query.cols() != data.X.cols()) throw DimensionMismatch("posterior: query dimension differs from inputs");
  return ExactGp(data.X, kernel, noise).posterior(data.y, query);
}

Eigen::VectorXd sample_prior_outputs(const Eigen::Ref<const Eigen::MatrixXd>& x, const KernelSpec& kernel,
                                     const NoiseModel& noise, std::uint64_t seed, std::uint64_t stream) {
  return ExactGp(x, kernel, noise).sample(seed, stream);
}

}  // namespace sgpr
