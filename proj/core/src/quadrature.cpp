#include "sgpr/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Eigenvalues>

#include "sgpr/errors.hpp"

namespace sgpr {

namespace {

// Nodes from the symmetric Jacobi matrix with zero diagonal and the given
// off-diagonal; weights 1 / sum_k p_k(x)^2 over the orthonormal polynomials
// generated by the same recurrence (p_0 = 1 for a probability measure).
QuadratureRule golub_welsch(const Eigen::VectorXd& offdiag) {
  const Index q = offdiag.size() + 1;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(Eigen::VectorXd::Zero(q), offdiag, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw EigenFailure("quadrature: Jacobi matrix eigenvalues failed");
  const Eigen::VectorXd x = solver.eigenvalues();

  QuadratureRule rule;
  rule.nodes.resize(q, 1);
  rule.weights.resize(q);
  for (Index i = 0; i < q; ++i) {
    // Sum of squares tracked as sum * exp(2 * log_scale).
    double prev = 0.0;
    double cur = 1.0;
    double sum = 1.0;
    double log_scale = 0.0;
    for (Index k = 0; k + 1 < q; ++k) {
      const double next = (x(i) * cur - (k > 0 ? offdiag(k - 1) * prev : 0.0)) / offdiag(k);
      prev = cur;
      cur = next;
      sum += cur * cur;
      if (std::abs(cur) > 1e100) {
        prev *= 1e-100;
        cur *= 1e-100;
        sum *= 1e-200;
        log_scale += 100.0 * std::log(10.0);
      }
    }
    rule.nodes(i, 0) = x(i);
    rule.weights(i) = std::exp(-std::log(sum) - 2.0 * log_scale);
  }
  return rule;
}

QuadratureRule prune_and_normalize(const QuadratureRule& rule, double relative_floor) {
  const double wmax = rule.weights.maxCoeff();
  std::vector<Index> keep;
  for (Index i = 0; i < rule.size(); ++i)
    if (rule.weights(i) > relative_floor * wmax) keep.push_back(i);
  QuadratureRule out;
  out.nodes.resize(static_cast<Index>(keep.size()), rule.nodes.cols());
  out.weights.resize(static_cast<Index>(keep.size()));
  for (Index r = 0; r < out.size(); ++r) {
    out.nodes.row(r) = rule.nodes.row(keep[r]);
    out.weights(r) = rule.weights(keep[r]);
  }
  out.weights /= out.weights.sum();
  return out;
}

QuadratureRule tensor_product(const std::vector<QuadratureRule>& axes) {
  Index total = 1;
  for (const auto& a : axes) total *= a.size();
  const Index dim = static_cast<Index>(axes.size());
  QuadratureRule out;
  out.nodes.resize(total, dim);
  out.weights.resize(total);
  std::vector<Index> idx(axes.size(), 0);
  for (Index r = 0; r < total; ++r) {
    double w = 1.0;
    for (Index d = 0; d < dim; ++d) {
      out.nodes(r, d) = axes[d].nodes(idx[d], 0);
      w *= axes[d].weights(idx[d]);
    }
    out.weights(r) = w;
    for (Index d = dim - 1; d >= 0; --d) {
      if (++idx[d] < axes[d].size()) break;
      idx[d] = 0;
    }
  }
  return out;
}

}  // namespace

QuadratureRule gauss_hermite(Index q, double relative_floor) {
  if (q < 1) throw InvalidHyperparameter("gauss_hermite: need at least one node");
  if (q == 1) return QuadratureRule{Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Ones(1)};
  Eigen::VectorXd off(q - 1);
  for (Index k = 0; k + 1 < q; ++k) off(k) = std::sqrt(static_cast<double>(k + 1));
  return prune_and_normalize(golub_welsch(off), relative_floor);
}

QuadratureRule gauss_legendre(Index q, double lower, double upper) {
  if (q < 1) throw InvalidHyperparameter("gauss_legendre: need at least one node");
  if (!(lower < upper)) throw InvalidHyperparameter("gauss_legendre: empty interval");
  QuadratureRule rule;
  if (q == 1) {
    rule = QuadratureRule{Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Ones(1)};
  } else {
    Eigen::VectorXd off(q - 1);
    for (Index k = 0; k + 1 < q; ++k) {
      const double n = static_cast<double>(k + 1);
      off(k) = n / std::sqrt(4.0 * n * n - 1.0);
    }
    rule = prune_and_normalize(golub_welsch(off), 0.0);
  }
  rule.nodes.array() = lower + 0.5 * (upper - lower) * (rule.nodes.array() + 1.0);
  return rule;
}

QuadratureRule quadrature_for(const DensitySpec& density, Index q) {
  density.validate();
  const Index dim = density.dim();
  if (auto* e = std::get_if<EmpiricalDensity>(&density.value)) {
    const Index n = e->sample.rows();
    return QuadratureRule{e->sample, Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n))};
  }
  const Index per_axis =
      dim == 1 ? q : static_cast<Index>(std::ceil(std::pow(static_cast<double>(q), 1.0 / static_cast<double>(dim)) - 1e-9));
  std::vector<QuadratureRule> axes;
  for (Index d = 0; d < dim; ++d) {
    if (auto* g = std::get_if<GaussianDensity>(&density.value)) {
      QuadratureRule r = gauss_hermite(per_axis);
      r.nodes.array() = g->mean(d) + g->stddev(d) * r.nodes.array();
      axes.push_back(std::move(r));
    } else {
      const auto& u = std::get<UniformDensity>(density.value);
      axes.push_back(gauss_legendre(per_axis, u.lower(d), u.upper(d)));
    }
  }
  return dim == 1 ? axes.front() : tensor_product(axes);
}

}  // namespace sgpr
