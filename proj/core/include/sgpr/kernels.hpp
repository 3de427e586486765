#pragma once

#include <cstdint>
#include <string>
#include <variant>

#include <Eigen/Core>

namespace sgpr {

using Eigen::Index;

enum class KernelFamily { SquaredExponential, MaternHalfInteger };

/// Stationary covariance function. For the Matérn family `order` is k in
/// nu = k + 1/2; in D > 1 the kernel is the product of 1-D Matérn kernels
/// with the variance applied once.
struct KernelSpec {
  KernelFamily family = KernelFamily::SquaredExponential;
  int order = 0;
  double variance = 1.0;
  Eigen::VectorXd lengthscales = Eigen::VectorXd::Ones(1);

  static KernelSpec squared_exponential(double variance, double lengthscale, Index dim = 1);
  static KernelSpec squared_exponential_ard(double variance, Eigen::VectorXd lengthscales);
  static KernelSpec matern(int order, double variance, double lengthscale, Index dim = 1);

  Index dim() const { return lengthscales.size(); }
  /// Throws InvalidHyperparameter.
  void validate() const;
  std::string describe() const;
};

double eval(const KernelSpec& kernel, const Eigen::Ref<const Eigen::VectorXd>& x,
            const Eigen::Ref<const Eigen::VectorXd>& x2);

/// Rows of `x` are points. The one-argument form is exactly symmetric.
Eigen::MatrixXd gram(const KernelSpec& kernel, const Eigen::Ref<const Eigen::MatrixXd>& x,
                     const Eigen::Ref<const Eigen::MatrixXd>& x2);
Eigen::MatrixXd gram(const KernelSpec& kernel, const Eigen::Ref<const Eigen::MatrixXd>& x);

/// k(x_i, x_i) for each row; equals the variance for every stationary kernel here.
Eigen::VectorXd gram_diagonal(const KernelSpec& kernel, const Eigen::Ref<const Eigen::MatrixXd>& x);

/// Matérn (k + 1/2) profile in the scaled distance r / lengthscale, unit variance.
double matern_profile(int order, double scaled_distance);

struct GaussianDensity {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;
};

struct UniformDensity {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

struct EmpiricalDensity {
  Eigen::MatrixXd sample;
};

/// Input density p(x) of the covariance operator.
struct DensitySpec {
  std::variant<GaussianDensity, UniformDensity, EmpiricalDensity> value;

  static DensitySpec gaussian(double mean, double stddev, Index dim = 1);
  static DensitySpec uniform(double lower, double upper, Index dim = 1);
  static DensitySpec empirical(Eigen::MatrixXd sample);

  Index dim() const;
  void validate() const;
  std::string describe() const;
};

/// n rows drawn from the density with a counter-based stream keyed by (seed, stream).
/// Empirical densities are resampled with replacement.
Eigen::MatrixXd sample_inputs(const DensitySpec& density, Index n, std::uint64_t seed, std::uint64_t stream = 0);

}  // namespace sgpr
