#pragma once

#include <optional>

#include <Eigen/Core>

#include "sgpr/spectrum.hpp"

namespace sgpr {

struct Lemma1Bounds {
  double tight = 0.0;
  double loose = 0.0;
};

/// tight = (t + lambda ||y||^2 / (s + lambda)) / (2 s),
/// loose = t (1 + ||y||^2 / (s + t)) / (2 s), s = noise variance.
/// Throws OrderingViolation if lambda_max > t (1 + 1e-8).
Lemma1Bounds lemma1(double t, double lambda_max, double norm_y_sq, double noise_var);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// [t / (2 s), t / s] for the expected KL under prior-drawn outputs.
Interval lemma2_interval(double t, double noise_var);

/// Theorems with an a priori trace bound C = N * tail(M):
///   thm1 = C / (2 s delta) (1 + ||y||^2 / s)
///   thm2 = C / (delta s)
///   thm3 = (C (M + 1) + 2 N v eps) / (2 s delta) (1 + ||y||^2 / s)
///   thm4 = (C (M + 1) + 2 N v eps) / (delta s)
/// All throw InvalidConfidence unless 0 < delta < 1.
double thm1(Index n, Index m, double delta, double norm_y_sq, double noise_var, const SpectrumTail& tail);
double thm2(Index n, Index m, double delta, double noise_var, const SpectrumTail& tail);
double thm3(Index n, Index m, double delta, double eps, double variance, double norm_y_sq, double noise_var,
            const SpectrumTail& tail);
double thm4(Index n, Index m, double delta, double eps, double variance, double noise_var, const SpectrumTail& tail);

/// The same four bounds from a precomputed tail value sum_{m > M} lambda_m.
double thm1_from_tail(Index n, double delta, double norm_y_sq, double noise_var, double tail_value);
double thm2_from_tail(Index n, double delta, double noise_var, double tail_value);
double thm3_from_tail(Index n, Index m, double delta, double eps, double variance, double norm_y_sq,
                      double noise_var, double tail_value);
double thm4_from_tail(Index n, Index m, double delta, double eps, double variance, double noise_var,
                      double tail_value);

/// (M + 1) sum_{m > M} lambda_m(K_ff) + 2 N v eps: bound on E[t] for an
/// eps k-DPP selection (eps = 0 is the exact k-DPP case).
double nystrom_trace_bound(double matrix_eig_tail, Index m, Index n, double variance, double eps);

struct ScheduleParams {
  double gamma = 1.0;
  double gamma_prime = 4.0;
  double delta = 0.1;
  double R = 1.0;
  double eps_prime = 0.1;
};

/// SE kernel, Gaussian inputs, homoscedastic noise: the constants the
/// inducing-count schedules depend on.
struct SeScheduleConstants {
  double variance = 1.0;
  double lengthscale = 1.0;
  double input_std = 1.0;
  double noise_var = 1.0;
};

struct SeSchedule {
  Index m = 0;
  double m_real = 0.0;
  /// Prescribed eps = delta s / (v N^(gamma + 2)).
  double eps = 0.0;
  /// D~ = v sqrt(2a) / (2 sqrt(A) s delta (1 - B)).
  double d_tilde = 0.0;
  /// N^-gamma (2R/s + 2/N), the KL level the schedule certifies.
  double kl_guarantee = 0.0;
  double log_inv_b = 0.0;
};

/// M = ceil(((3 + gamma) log N + log D~) / log(1/B)), at least 1.
SeSchedule m_schedule_se_1d(Index n, const ScheduleParams& params, const SeScheduleConstants& constants);

enum class DdForm {
  /// M = (log(N^gamma' (2a/A)^(D/2) D^2 / alpha) / alpha)^D, the value for
  /// which (2a/A)^(D/2) D^2 exp(-alpha M^(1/D)) / alpha = N^-gamma'.
  Derivation,
  /// M = (1/alpha) (log(N^gamma' (2a/A)^(D/2) D^2 / alpha))^D.
  Literal,
};

struct SeScheduleDd {
  Index m = 0;
  double m_real = 0.0;
  /// M + D - 1, the number of features used for inference.
  Index features = 0;
  double alpha = 0.0;
};

/// D-dimensional isotropic SE schedule with alpha = -log B.
SeScheduleDd m_schedule_se_dd(Index n, Index dim, const ScheduleParams& params,
                              const SeScheduleConstants& constants, DdForm form = DdForm::Derivation);

enum class MaternMode {
  /// exponent 1/k + eps' (data-dependent bound, any outputs).
  Aposteriori,
  /// exponent 1/(2k) + eps' (outputs drawn from the prior).
  Average,
  /// exponent 1/(2k + 1) + eps' (1-D eigenfunction features).
  Eigenfunction,
};

double matern_schedule_exponent(int order, double eps_prime, MaternMode mode);

/// M = min(N, ceil(N^exponent)). Throws OrderTooSmall when exponent >= 1.
Index m_schedule_matern(Index n, int order, double eps_prime, MaternMode mode);

struct Prop1Bounds {
  bool applicable = false;
  double eps = 0.0;
  /// sigma_2 sqrt(eps)
  double mean_dev = 0.0;
  /// sigma_2 sqrt(3 eps)
  double mean_dev_weak = 0.0;
  /// (1 - sqrt(3 eps), 1 + sqrt(3 eps)) for sigma_1^2 / sigma_2^2.
  Interval var_ratio;
};

/// Pointwise bounds between 1-D marginals with KL <= kl; applicable only when
/// eps = 2 kl <= 1/5.
Prop1Bounds prop1_pointwise(double mu2, double var2, double kl);

}  // namespace sgpr
