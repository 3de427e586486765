#pragma once

#include <functional>
#include <memory>

#include <Eigen/Core>

#include "sgpr/kernels.hpp"
#include "sgpr/quadrature.hpp"

namespace sgpr {

/// Constants of the SE kernel / Gaussian input operator:
/// a = 1/(4 sigma^2), b = 1/(2 ell^2), c = sqrt(a^2 + 2ab), A = a + b + c, B = b/A.
struct SeGaussianConstants {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double A = 0.0;
  double B = 0.0;
};

SeGaussianConstants se_gaussian_constants(double lengthscale, double input_std);

/// lambda_m = v sqrt(2a/A) B^(m-1), m = 1..count.
Eigen::VectorXd se_gaussian_eigenvalues(double variance, double lengthscale, double input_std, Index count);

/// sum_{m > M} lambda_m = v sqrt(2a) / ((1 - B) sqrt(A)) B^M.
double se_gaussian_tail(double variance, double lengthscale, double input_std, Index m);

/// The `count` largest products prod_d lambda^(d)_{m_d} of the per-axis unit
/// variance spectra, times `variance`, in descending order.
Eigen::VectorXd se_ard_gaussian_spectrum(const Eigen::VectorXd& lengthscales, const Eigen::VectorXd& input_stds,
                                         double variance, Index count);

/// c0 M^(-2k-1).
double matern_tail_bound(int order, Index m, double c0);

/// c0 M^(-2k-1) log(M)^(2(D-1)(k+1)), the D-dimensional variant with the
/// product-kernel log factor. Equals matern_tail_bound when D = 1.
double matern_tail_bound_log(int order, Index m, double c0, Index dim);

enum class TailValidity { Exact, AsymptoticBound };

/// Evaluator pair for an operator spectrum: m -> lambda_m (1-based) and
/// M -> sum_{m > M} lambda_m.
class SpectrumTail {
 public:
  SpectrumTail(std::function<double(Index)> eigenvalue, std::function<double(Index)> tail, TailValidity validity);

  static SpectrumTail se_gaussian(double variance, double lengthscale, double input_std);
  /// Exact tail of a finite nonincreasing list (zero beyond its end).
  static SpectrumTail from_eigenvalues(Eigen::VectorXd eigenvalues);
  /// c0 M^(-2k-1) tail; eigenvalue m reports tail(m-1) - tail(m) of the bound.
  static SpectrumTail matern(int order, double c0, Index dim = 1, bool log_factor = false);

  double eigenvalue(Index m) const { return eigenvalue_(m); }
  double tail(Index m) const { return tail_(m); }
  TailValidity validity() const { return validity_; }

 private:
  std::function<double(Index)> eigenvalue_;
  std::function<double(Index)> tail_;
  TailValidity validity_;
};

/// Numeric Mercer spectrum of the operator (K f)(x) = int k(x, x') f(x') p(x') dx'
/// from a quadrature rule: eigenpairs of W^(1/2) K W^(1/2) with Nyström
/// extension phi_m(x) = (1/lambda_m) sum_j sqrt(w_j) k(x, x_j) u_jm.
class NystromSpectrum {
 public:
  /// Throws QuadratureTooCoarse when weighted orthonormality of the leading
  /// `count` eigenfunctions fails at 1e-6 or the Mercer check
  /// sum_m lambda_m phi_m(x)^2 <= k(x, x)(1 + 1e-3) fails at a node.
  NystromSpectrum(KernelSpec kernel, QuadratureRule rule, Index count);

  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  /// Every quadrature-operator eigenvalue, descending.
  const Eigen::VectorXd& all_eigenvalues() const { return all_eigenvalues_; }
  Index count() const { return eigenvalues_.size(); }
  const QuadratureRule& rule() const { return rule_; }
  const KernelSpec& kernel() const { return kernel_; }

  /// Rows are points, columns eigenfunctions 1..count.
  Eigen::MatrixXd evaluate(const Eigen::Ref<const Eigen::MatrixXd>& x) const;

  /// Sum of all quadrature-operator eigenvalues (equals int k(x,x) p(x) dx under the rule).
  double trace() const { return trace_; }
  /// Sum of the quadrature-operator eigenvalues beyond the leading m.
  double numeric_tail(Index m) const;
  double orthonormality_error() const { return orthonormality_error_; }
  double mercer_ratio() const { return mercer_ratio_; }

 private:
  KernelSpec kernel_;
  QuadratureRule rule_;
  Eigen::VectorXd eigenvalues_;
  Eigen::VectorXd all_eigenvalues_;
  Eigen::MatrixXd coefficients_;  // sqrt(w_j) u_jm / lambda_m
  double trace_ = 0.0;
  double orthonormality_error_ = 0.0;
  double mercer_ratio_ = 0.0;
};

/// Nyström spectrum of (kernel, density) with a q-point rule. Requires q >= 8 count.
NystromSpectrum nystrom_spectrum(const KernelSpec& kernel, const DensitySpec& density, Index count, Index q = 2048);

/// Smallest c0 with c0 M^(-2k-1) >= numeric tail for all M in [m_lo, m_hi]
/// under the given Nyström spectrum.
double calibrate_matern_c0(const NystromSpectrum& spectrum, int order, Index m_lo, Index m_hi);

}  // namespace sgpr
