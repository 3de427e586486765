#include "sgpr/kernels.hpp"

#include <cmath>
#include <sstream>

#include "sgpr/errors.hpp"
#include "sgpr/rng.hpp"

namespace sgpr {

namespace {

// Scaled inputs stored one point per column so each point is contiguous.
Eigen::MatrixXd scaled_points(const KernelSpec& kernel, const Eigen::Ref<const Eigen::MatrixXd>& x) {
  if (x.cols() != kernel.dim()) {
    throw DimensionMismatch("kernel of dimension " + std::to_string(kernel.dim()) + " applied to " +
                            std::to_string(x.cols()) + "-column inputs");
  }
  Eigen::MatrixXd out = x.transpose();
  out.array().colwise() /= kernel.lengthscales.array();
  return out;
}

double double_factorial_ratio(int k, int i) {
  // k! (k+i)! / ((2k)! i! (k-i)!)
  double r = std::lgamma(k + 1.0) + std::lgamma(k + i + 1.0) - std::lgamma(2.0 * k + 1.0) -
             std::lgamma(i + 1.0) - std::lgamma(k - i + 1.0);
  return std::exp(r);
}

template <class A, class B>
double eval_scaled(const KernelSpec& kernel, const A& p, const B& q) {
  if (kernel.family == KernelFamily::SquaredExponential) {
    return kernel.variance * std::exp(-0.5 * (p - q).squaredNorm());
  }
  double value = kernel.variance;
  for (Index d = 0; d < p.size(); ++d) value *= matern_profile(kernel.order, std::abs(p(d) - q(d)));
  return value;
}

}  // namespace

KernelSpec KernelSpec::squared_exponential(double variance, double lengthscale, Index dim) {
  KernelSpec k;
  k.family = KernelFamily::SquaredExponential;
  k.variance = variance;
  k.lengthscales = Eigen::VectorXd::Constant(dim, lengthscale);
  k.validate();
  return k;
}

KernelSpec KernelSpec::squared_exponential_ard(double variance, Eigen::VectorXd lengthscales) {
  KernelSpec k;
  k.family = KernelFamily::SquaredExponential;
  k.variance = variance;
  k.lengthscales = std::move(lengthscales);
  k.validate();
  return k;
}

KernelSpec KernelSpec::matern(int order, double variance, double lengthscale, Index dim) {
  KernelSpec k;
  k.family = KernelFamily::MaternHalfInteger;
  k.order = order;
  k.variance = variance;
  k.lengthscales = Eigen::VectorXd::Constant(dim, lengthscale);
  k.validate();
  return k;
}

void KernelSpec::validate() const {
  if (!(variance > 0.0) || !std::isfinite(variance)) throw InvalidHyperparameter("kernel variance must be positive");
  if (lengthscales.size() < 1) throw InvalidHyperparameter("kernel needs at least one lengthscale");
  if (!(lengthscales.array() > 0.0).all() || !lengthscales.allFinite()) {
    throw InvalidHyperparameter("kernel lengthscales must be positive");
  }
  if (family == KernelFamily::MaternHalfInteger && order < 0) {
    throw InvalidHyperparameter("Matérn order must be nonnegative");
  }
}

std::string KernelSpec::describe() const {
  std::ostringstream os;
  if (family == KernelFamily::SquaredExponential) {
    os << "se";
  } else {
    os << "matern" << (2 * order + 1) << "/2";
  }
  os << "(v=" << variance << ", ell=";
  for (Index d = 0; d < lengthscales.size(); ++d) os << (d ? "," : "") << lengthscales(d);
  os << ")";
  return os.str();
}

double matern_profile(int order, double r) {
  const double nu = order + 0.5;
  const double s = std::sqrt(2.0 * nu) * r;
  double poly = 0.0;
  for (int i = 0; i <= order; ++i) {
    poly += double_factorial_ratio(order, i) * std::pow(2.0 * s, order - i);
  }
  return std::exp(-s) * poly;
}

double eval(const KernelSpec& kernel, const Eigen::Ref<const Eigen::VectorXd>& x,
            const Eigen::Ref<const Eigen::VectorXd>& x2) {
  if (x.size() != kernel.dim() || x2.size() != kernel.dim()) {
    throw DimensionMismatch("eval: point dimension differs from kernel dimension");
  }
  const Eigen::VectorXd p = x.cwiseQuotient(kernel.lengthscales);
  const Eigen::VectorXd q = x2.cwiseQuotient(kernel.lengthscales);
  return eval_scaled(kernel, p, q);
}

Eigen::MatrixXd gram(const KernelSpec& kernel, const Eigen::Ref<const Eigen::MatrixXd>& x,
                     const Eigen::Ref<const Eigen::MatrixXd>& x2) {
  if (x.cols() != x2.cols()) throw DimensionMismatch("gram: column counts differ");
  const Eigen::MatrixXd p = scaled_points(kernel, x);
  const Eigen::MatrixXd q = scaled_points(kernel, x2);
  Eigen::MatrixXd out(x.rows(), x2.rows());
  for (Index j = 0; j < q.cols(); ++j) {
    for (Index i = 0; i < p.cols(); ++i) out(i, j) = eval_scaled(kernel, p.col(i), q.col(j));
  }
  return out;
}

Eigen::MatrixXd gram(const KernelSpec& kernel, const Eigen::Ref<const Eigen::MatrixXd>& x) {
  const Eigen::MatrixXd p = scaled_points(kernel, x);
  const Index n = p.cols();
  Eigen::MatrixXd out(n, n);
  if (kernel.family == KernelFamily::SquaredExponential && p.rows() == 1) {
    const double v = kernel.variance;
    for (Index j = 0; j < n; ++j) {
      const double xj = p(0, j);
      out(j, j) = v;
      for (Index i = j + 1; i < n; ++i) {
        const double d = p(0, i) - xj;
        out(i, j) = v * std::exp(-0.5 * d * d);
      }
    }
  } else {
    for (Index j = 0; j < n; ++j) {
      out(j, j) = kernel.variance;
      for (Index i = j + 1; i < n; ++i) out(i, j) = eval_scaled(kernel, p.col(i), p.col(j));
    }
  }
  out.triangularView<Eigen::StrictlyUpper>() = out.transpose();
  return out;
}

Eigen::VectorXd gram_diagonal(const KernelSpec& kernel, const Eigen::Ref<const Eigen::MatrixXd>& x) {
  if (x.cols() != kernel.dim()) throw DimensionMismatch("gram_diagonal: column count differs from kernel dimension");
  return Eigen::VectorXd::Constant(x.rows(), kernel.variance);
}

DensitySpec DensitySpec::gaussian(double mean, double stddev, Index dim) {
  DensitySpec d{GaussianDensity{Eigen::VectorXd::Constant(dim, mean), Eigen::VectorXd::Constant(dim, stddev)}};
  d.validate();
  return d;
}

DensitySpec DensitySpec::uniform(double lower, double upper, Index dim) {
  DensitySpec d{UniformDensity{Eigen::VectorXd::Constant(dim, lower), Eigen::VectorXd::Constant(dim, upper)}};
  d.validate();
  return d;
}

DensitySpec DensitySpec::empirical(Eigen::MatrixXd sample) {
  DensitySpec d{EmpiricalDensity{std::move(sample)}};
  d.validate();
  return d;
}

Index DensitySpec::dim() const {
  if (auto* g = std::get_if<GaussianDensity>(&value)) return g->mean.size();
  if (auto* u = std::get_if<UniformDensity>(&value)) return u->lower.size();
  return std::get<EmpiricalDensity>(value).sample.cols();
}

void DensitySpec::validate() const {
  if (auto* g = std::get_if<GaussianDensity>(&value)) {
    if (g->mean.size() != g->stddev.size() || g->mean.size() < 1) {
      throw InvalidHyperparameter("gaussian density: mean/stddev size mismatch");
    }
    if (!(g->stddev.array() > 0.0).all()) throw InvalidHyperparameter("gaussian density: stddev must be positive");
  } else if (auto* u = std::get_if<UniformDensity>(&value)) {
    if (u->lower.size() != u->upper.size() || u->lower.size() < 1) {
      throw InvalidHyperparameter("uniform density: bound size mismatch");
    }
    if (!(u->lower.array() < u->upper.array()).all()) {
      throw InvalidHyperparameter("uniform density: lower bound must be below upper bound");
    }
  } else {
    const auto& e = std::get<EmpiricalDensity>(value);
    if (e.sample.rows() < 1 || e.sample.cols() < 1) throw InvalidHyperparameter("empirical density: empty sample");
  }
}

std::string DensitySpec::describe() const {
  std::ostringstream os;
  if (auto* g = std::get_if<GaussianDensity>(&value)) {
    os << "gaussian(mean=" << g->mean(0) << ", std=" << g->stddev(0) << ", dim=" << g->mean.size() << ")";
  } else if (auto* u = std::get_if<UniformDensity>(&value)) {
    os << "uniform(" << u->lower(0) << ", " << u->upper(0) << ", dim=" << u->lower.size() << ")";
  } else {
    os << "empirical(n=" << std::get<EmpiricalDensity>(value).sample.rows() << ")";
  }
  return os.str();
}

Eigen::MatrixXd sample_inputs(const DensitySpec& density, Index n, std::uint64_t seed, std::uint64_t stream) {
  density.validate();
  const Index dim = density.dim();
  Eigen::MatrixXd x(n, dim);
  CounterRng rng(seed, stream);
  if (auto* g = std::get_if<GaussianDensity>(&density.value)) {
    for (Index i = 0; i < n; ++i)
      for (Index d = 0; d < dim; ++d) x(i, d) = g->mean(d) + g->stddev(d) * rng.normal();
  } else if (auto* u = std::get_if<UniformDensity>(&density.value)) {
    for (Index i = 0; i < n; ++i)
      for (Index d = 0; d < dim; ++d) x(i, d) = u->lower(d) + (u->upper(d) - u->lower(d)) * rng.uniform();
  } else {
    const auto& s = std::get<EmpiricalDensity>(density.value).sample;
    for (Index i = 0; i < n; ++i) x.row(i) = s.row(static_cast<Index>(rng.below(s.rows())));
  }
  return x;
}

}  // namespace sgpr
