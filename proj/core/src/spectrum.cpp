#include "sgpr/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "sgpr/errors.hpp"

namespace sgpr {

SeGaussianConstants se_gaussian_constants(double lengthscale, double input_std) {
  if (!(lengthscale > 0.0) || !(input_std > 0.0)) {
    throw InvalidHyperparameter("SE/Gaussian spectrum needs positive lengthscale and input std");
  }
  SeGaussianConstants k;
  k.a = 1.0 / (4.0 * input_std * input_std);
  k.b = 1.0 / (2.0 * lengthscale * lengthscale);
  k.c = std::sqrt(k.a * k.a + 2.0 * k.a * k.b);
  k.A = k.a + k.b + k.c;
  k.B = k.b / k.A;
  return k;
}

Eigen::VectorXd se_gaussian_eigenvalues(double variance, double lengthscale, double input_std, Index count) {
  if (!(variance > 0.0)) throw InvalidHyperparameter("SE/Gaussian spectrum needs positive variance");
  if (count < 1) throw InvalidHyperparameter("se_gaussian_eigenvalues: count must be at least 1");
  const auto k = se_gaussian_constants(lengthscale, input_std);
  Eigen::VectorXd out(count);
  const double first = variance * std::sqrt(2.0 * k.a / k.A);
  for (Index m = 0; m < count; ++m) out(m) = first * std::pow(k.B, static_cast<double>(m));
  return out;
}

double se_gaussian_tail(double variance, double lengthscale, double input_std, Index m) {
  if (!(variance > 0.0)) throw InvalidHyperparameter("SE/Gaussian spectrum needs positive variance");
  if (m < 0) throw InvalidHyperparameter("se_gaussian_tail: negative cutoff");
  const auto k = se_gaussian_constants(lengthscale, input_std);
  return variance * std::sqrt(2.0 * k.a) / ((1.0 - k.B) * std::sqrt(k.A)) * std::pow(k.B, static_cast<double>(m));
}

Eigen::VectorXd se_ard_gaussian_spectrum(const Eigen::VectorXd& lengthscales, const Eigen::VectorXd& input_stds,
                                         double variance, Index count) {
  const Index dim = lengthscales.size();
  if (dim < 1 || input_stds.size() != dim) throw InvalidHyperparameter("se_ard_gaussian_spectrum: dimension mismatch");
  if (count < 1) throw InvalidHyperparameter("se_ard_gaussian_spectrum: count must be at least 1");
  if (!(variance > 0.0)) throw InvalidHyperparameter("se_ard_gaussian_spectrum: variance must be positive");
  std::vector<double> log_first(dim), log_ratio(dim);
  for (Index d = 0; d < dim; ++d) {
    const auto k = se_gaussian_constants(lengthscales(d), input_stds(d));
    log_first[d] = 0.5 * std::log(2.0 * k.a / k.A);
    log_ratio[d] = std::log(k.B);
  }
  // Best-first search over multi-indices (0-based exponents). Each product is
  // reached from the all-zero index by unit increments; each index is pushed once.
  using Item = std::pair<double, std::vector<int>>;
  auto cmp = [](const Item& x, const Item& y) { return x.first < y.first; };
  std::priority_queue<Item, std::vector<Item>, decltype(cmp)> frontier(cmp);
  std::set<std::vector<int>> seen;
  auto log_value = [&](const std::vector<int>& idx) {
    double s = 0.0;
    for (Index d = 0; d < dim; ++d) s += log_first[d] + idx[d] * log_ratio[d];
    return s;
  };
  std::vector<int> origin(dim, 0);
  frontier.emplace(log_value(origin), origin);
  seen.insert(origin);
  Eigen::VectorXd out(count);
  for (Index m = 0; m < count; ++m) {
    auto [lv, idx] = frontier.top();
    frontier.pop();
    out(m) = variance * std::exp(lv);
    for (Index d = 0; d < dim; ++d) {
      auto next = idx;
      ++next[d];
      if (seen.insert(next).second) frontier.emplace(log_value(next), next);
    }
  }
  return out;
}

double matern_tail_bound(int order, Index m, double c0) {
  if (order < 0 || m < 1 || !(c0 > 0.0)) throw InvalidHyperparameter("matern_tail_bound: need k >= 0, M >= 1, c0 > 0");
  return c0 * std::pow(static_cast<double>(m), -(2.0 * order + 1.0));
}

double matern_tail_bound_log(int order, Index m, double c0, Index dim) {
  if (dim < 1) throw InvalidHyperparameter("matern_tail_bound_log: dimension must be at least 1");
  const double base = matern_tail_bound(order, m, c0);
  if (dim == 1) return base;
  const double lg = std::log(static_cast<double>(m));
  return base * std::pow(lg, 2.0 * static_cast<double>(dim - 1) * (order + 1.0));
}

SpectrumTail::SpectrumTail(std::function<double(Index)> eigenvalue, std::function<double(Index)> tail,
                           TailValidity validity)
    : eigenvalue_(std::move(eigenvalue)), tail_(std::move(tail)), validity_(validity) {}

SpectrumTail SpectrumTail::se_gaussian(double variance, double lengthscale, double input_std) {
  const auto k = se_gaussian_constants(lengthscale, input_std);
  if (!(variance > 0.0)) throw InvalidHyperparameter("SE/Gaussian spectrum needs positive variance");
  const double first = variance * std::sqrt(2.0 * k.a / k.A);
  const double B = k.B;
  return SpectrumTail(
      [first, B](Index m) { return first * std::pow(B, static_cast<double>(m - 1)); },
      [first, B](Index m) { return first / (1.0 - B) * std::pow(B, static_cast<double>(m)); }, TailValidity::Exact);
}

SpectrumTail SpectrumTail::from_eigenvalues(Eigen::VectorXd eigenvalues) {
  const Index n = eigenvalues.size();
  // suffix[m] = sum_{i >= m} lambda_i (0-based), summed from the small end.
  auto suffix = std::make_shared<std::vector<double>>(n + 1, 0.0);
  for (Index i = n - 1; i >= 0; --i) (*suffix)[i] = (*suffix)[i + 1] + std::max(eigenvalues(i), 0.0);
  auto values = std::make_shared<Eigen::VectorXd>(std::move(eigenvalues));
  return SpectrumTail(
      [values](Index m) { return (m >= 1 && m <= values->size()) ? std::max((*values)(m - 1), 0.0) : 0.0; },
      [suffix, n](Index m) { return m >= n ? 0.0 : (*suffix)[std::max<Index>(m, 0)]; }, TailValidity::Exact);
}

SpectrumTail SpectrumTail::matern(int order, double c0, Index dim, bool log_factor) {
  auto tail = [order, c0, dim, log_factor](Index m) {
    const Index mm = std::max<Index>(m, 1);
    return log_factor ? matern_tail_bound_log(order, mm, c0, dim) : matern_tail_bound(order, mm, c0);
  };
  auto eig = [tail](Index m) { return m <= 1 ? tail(1) : std::max(tail(m - 1) - tail(m), 0.0); };
  return SpectrumTail(eig, tail, TailValidity::AsymptoticBound);
}

NystromSpectrum::NystromSpectrum(KernelSpec kernel, QuadratureRule rule, Index count)
    : kernel_(std::move(kernel)), rule_(std::move(rule)) {
  const Index q = rule_.size();
  if (count < 1) throw InvalidHyperparameter("nystrom_spectrum: count must be at least 1");
  if (count > q) {
    throw QuadratureTooCoarse("nystrom_spectrum: " + std::to_string(count) + " eigenpairs requested from " +
                              std::to_string(q) + " effective nodes");
  }
  const Eigen::VectorXd sw = rule_.weights.cwiseSqrt();
  Eigen::MatrixXd a = gram(kernel_, rule_.nodes);
  a = sw.asDiagonal() * a * sw.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
  if (solver.info() != Eigen::Success) throw EigenFailure("nystrom_spectrum: eigendecomposition failed");
  all_eigenvalues_ = solver.eigenvalues().reverse();
  trace_ = a.trace();
  eigenvalues_ = all_eigenvalues_.head(count);
  if (!(eigenvalues_(count - 1) > 0.0)) {
    throw QuadratureTooCoarse("nystrom_spectrum: eigenvalue " + std::to_string(count) + " is not positive");
  }
  const Eigen::MatrixXd u = solver.eigenvectors().rightCols(count).rowwise().reverse();
  coefficients_ = sw.asDiagonal() * u;
  coefficients_.array().rowwise() /= eigenvalues_.transpose().array();

  const Eigen::MatrixXd phi = evaluate(rule_.nodes);
  const Eigen::MatrixXd gram_phi = phi.transpose() * rule_.weights.asDiagonal() * phi;
  orthonormality_error_ = (gram_phi - Eigen::MatrixXd::Identity(count, count)).cwiseAbs().maxCoeff();
  const Eigen::VectorXd mercer = phi.array().square().matrix() * eigenvalues_;
  mercer_ratio_ = (mercer / kernel_.variance).maxCoeff();
  if (!(orthonormality_error_ <= 1e-6)) {
    throw QuadratureTooCoarse("nystrom_spectrum: weighted orthonormality error " +
                              std::to_string(orthonormality_error_));
  }
  if (!(mercer_ratio_ <= 1.0 + 1e-3)) {
    throw QuadratureTooCoarse("nystrom_spectrum: Mercer check failed, ratio " + std::to_string(mercer_ratio_));
  }
}

Eigen::MatrixXd NystromSpectrum::evaluate(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  return gram(kernel_, x, rule_.nodes) * coefficients_;
}

double NystromSpectrum::numeric_tail(Index m) const {
  const Index n = all_eigenvalues_.size();
  const Index k = std::clamp<Index>(m, 0, n);
  return all_eigenvalues_.tail(n - k).reverse().cwiseMax(0.0).sum();
}

NystromSpectrum nystrom_spectrum(const KernelSpec& kernel, const DensitySpec& density, Index count, Index q) {
  if (q < 8 * count) {
    throw QuadratureTooCoarse("nystrom_spectrum: quadrature size " + std::to_string(q) + " below 8 x " +
                              std::to_string(count));
  }
  if (density.dim() != kernel.dim()) throw DimensionMismatch("nystrom_spectrum: density and kernel dimensions differ");
  return NystromSpectrum(kernel, quadrature_for(density, q), count);
}

double calibrate_matern_c0(const NystromSpectrum& spectrum, int order, Index m_lo, Index m_hi) {
  if (m_lo < 1 || m_hi < m_lo) throw InvalidHyperparameter("calibrate_matern_c0: bad M range");
  double c0 = 0.0;
  for (Index m = m_lo; m <= m_hi; ++m) {
    c0 = std::max(c0, spectrum.numeric_tail(m) * std::pow(static_cast<double>(m), 2.0 * order + 1.0));
  }
  if (!(c0 > 0.0)) throw NumericalInconsistency("calibrate_matern_c0: numeric tail vanished over the range");
  return c0;
}

}  // namespace sgpr
