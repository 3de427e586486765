#include "sgpr/bounds.hpp"

#include <cmath>
#include <string>

#include "sgpr/errors.hpp"

namespace sgpr {

namespace {

void check_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidConfidence("confidence delta must lie in (0, 1)");
}

void check_noise(double s) {
  if (!(s > 0.0)) throw InvalidHyperparameter("noise variance must be positive");
}

}  // namespace

Lemma1Bounds lemma1(double t, double lambda_max, double norm_y_sq, double noise_var) {
  check_noise(noise_var);
  if (t < 0.0 || lambda_max < 0.0) throw OrderingViolation("lemma1: t and lambda_max must be nonnegative");
  if (lambda_max > t * (1.0 + 1e-8)) {
    throw OrderingViolation("lemma1: lambda_max " + std::to_string(lambda_max) + " exceeds t " + std::to_string(t));
  }
  const double s = noise_var;
  Lemma1Bounds b;
  b.tight = (t + lambda_max * norm_y_sq / (s + lambda_max)) / (2.0 * s);
  b.loose = t * (1.0 + norm_y_sq / (s + t)) / (2.0 * s);
  return b;
}

Interval lemma2_interval(double t, double noise_var) {
  check_noise(noise_var);
  return Interval{t / (2.0 * noise_var), t / noise_var};
}

double thm1_from_tail(Index n, double delta, double norm_y_sq, double noise_var, double tail_value) {
  check_delta(delta);
  check_noise(noise_var);
  const double c = static_cast<double>(n) * tail_value;
  return c / (2.0 * noise_var * delta) * (1.0 + norm_y_sq / noise_var);
}

double thm2_from_tail(Index n, double delta, double noise_var, double tail_value) {
  check_delta(delta);
  check_noise(noise_var);
  return static_cast<double>(n) * tail_value / (delta * noise_var);
}

double thm3_from_tail(Index n, Index m, double delta, double eps, double variance, double norm_y_sq,
                      double noise_var, double tail_value) {
  check_delta(delta);
  check_noise(noise_var);
  const double nn = static_cast<double>(n);
  const double c = nn * tail_value;
  return (c * static_cast<double>(m + 1) + 2.0 * nn * variance * eps) / (2.0 * noise_var * delta) *
         (1.0 + norm_y_sq / noise_var);
}

double thm4_from_tail(Index n, Index m, double delta, double eps, double variance, double noise_var,
                      double tail_value) {
  check_delta(delta);
  check_noise(noise_var);
  const double nn = static_cast<double>(n);
  const double c = nn * tail_value;
  return (c * static_cast<double>(m + 1) + 2.0 * nn * variance * eps) / (delta * noise_var);
}

double thm1(Index n, Index m, double delta, double norm_y_sq, double noise_var, const SpectrumTail& tail) {
  return thm1_from_tail(n, delta, norm_y_sq, noise_var, tail.tail(m));
}

double thm2(Index n, Index m, double delta, double noise_var, const SpectrumTail& tail) {
  return thm2_from_tail(n, delta, noise_var, tail.tail(m));
}

double thm3(Index n, Index m, double delta, double eps, double variance, double norm_y_sq, double noise_var,
            const SpectrumTail& tail) {
  return thm3_from_tail(n, m, delta, eps, variance, norm_y_sq, noise_var, tail.tail(m));
}

double thm4(Index n, Index m, double delta, double eps, double variance, double noise_var, const SpectrumTail& tail) {
  return thm4_from_tail(n, m, delta, eps, variance, noise_var, tail.tail(m));
}

double nystrom_trace_bound(double matrix_eig_tail, Index m, Index n, double variance, double eps) {
  return static_cast<double>(m + 1) * matrix_eig_tail + 2.0 * static_cast<double>(n) * variance * eps;
}

SeSchedule m_schedule_se_1d(Index n, const ScheduleParams& params, const SeScheduleConstants& constants) {
  check_delta(params.delta);
  check_noise(constants.noise_var);
  if (!(params.gamma > 0.0) || !(params.R > 0.0)) throw InvalidHyperparameter("schedule needs gamma > 0 and R > 0");
  if (!(constants.variance > 0.0)) throw InvalidHyperparameter("schedule needs positive kernel variance");
  if (n < 2) throw InvalidHyperparameter("schedule needs N >= 2");
  const auto k = se_gaussian_constants(constants.lengthscale, constants.input_std);
  if (!(k.B > 0.0 && k.B < 1.0)) throw InvalidHyperparameter("schedule needs B in (0, 1)");
  const double nn = static_cast<double>(n);
  SeSchedule s;
  s.d_tilde = constants.variance * std::sqrt(2.0 * k.a) /
              (2.0 * std::sqrt(k.A) * constants.noise_var * params.delta * (1.0 - k.B));
  s.log_inv_b = -std::log(k.B);
  s.m_real = ((3.0 + params.gamma) * std::log(nn) + std::log(s.d_tilde)) / s.log_inv_b;
  s.m = std::max<Index>(1, static_cast<Index>(std::ceil(s.m_real)));
  s.eps = params.delta * constants.noise_var / (constants.variance * std::pow(nn, params.gamma + 2.0));
  s.kl_guarantee = std::pow(nn, -params.gamma) * (2.0 * params.R / constants.noise_var + 2.0 / nn);
  return s;
}

SeScheduleDd m_schedule_se_dd(Index n, Index dim, const ScheduleParams& params,
                              const SeScheduleConstants& constants, DdForm form) {
  if (dim < 1) throw InvalidHyperparameter("schedule needs D >= 1");
  if (!(params.gamma_prime > 0.0)) throw InvalidHyperparameter("schedule needs gamma' > 0");
  if (n < 2) throw InvalidHyperparameter("schedule needs N >= 2");
  const auto k = se_gaussian_constants(constants.lengthscale, constants.input_std);
  const double d = static_cast<double>(dim);
  SeScheduleDd s;
  s.alpha = -std::log(k.B);
  const double inner = params.gamma_prime * std::log(static_cast<double>(n)) + 0.5 * d * std::log(2.0 * k.a / k.A) +
                       2.0 * std::log(d) - std::log(s.alpha);
  const double base = std::max(inner, 0.0);
  s.m_real = form == DdForm::Derivation ? std::pow(base / s.alpha, d) : std::pow(base, d) / s.alpha;
  s.m = std::max<Index>(1, static_cast<Index>(std::ceil(s.m_real)));
  s.features = s.m + dim - 1;
  return s;
}

double matern_schedule_exponent(int order, double eps_prime, MaternMode mode) {
  if (order < 0) throw InvalidHyperparameter("Matérn order must be nonnegative");
  if (eps_prime < 0.0) throw InvalidHyperparameter("exponent slack must be nonnegative");
  const double k = static_cast<double>(order);
  switch (mode) {
    case MaternMode::Aposteriori:
      if (order == 0) throw OrderTooSmall("Matérn-1/2 has no sublinear a posteriori schedule");
      return 1.0 / k + eps_prime;
    case MaternMode::Average:
      if (order == 0) throw OrderTooSmall("Matérn-1/2 has no sublinear average-case schedule");
      return 1.0 / (2.0 * k) + eps_prime;
    case MaternMode::Eigenfunction:
      return 1.0 / (2.0 * k + 1.0) + eps_prime;
  }
  return 1.0;
}

Index m_schedule_matern(Index n, int order, double eps_prime, MaternMode mode) {
  const double e = matern_schedule_exponent(order, eps_prime, mode);
  if (e >= 1.0) {
    throw OrderTooSmall("Matérn order " + std::to_string(order) + " gives schedule exponent " + std::to_string(e) +
                        " >= 1");
  }
  const double m = std::ceil(std::pow(static_cast<double>(n), e) - 1e-9);
  return std::min<Index>(n, static_cast<Index>(m));
}

Prop1Bounds prop1_pointwise(double mu2, double var2, double kl) {
  (void)mu2;
  if (!(var2 > 0.0)) throw InvalidHyperparameter("prop1_pointwise: reference variance must be positive");
  Prop1Bounds b;
  b.eps = 2.0 * std::max(kl, 0.0);
  if (b.eps > 0.2) return b;
  b.applicable = true;
  const double sd = std::sqrt(var2);
  b.mean_dev = sd * std::sqrt(b.eps);
  b.mean_dev_weak = sd * std::sqrt(3.0 * b.eps);
  const double r = std::sqrt(3.0 * b.eps);
  b.var_ratio = Interval{1.0 - r, 1.0 + r};
  return b;
}

}  // namespace sgpr
