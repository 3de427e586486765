#pragma once

#include <Eigen/Core>

#include "sgpr/kernels.hpp"

namespace sgpr {

/// Nodes (one per row) and probability weights summing to one.
struct QuadratureRule {
  Eigen::MatrixXd nodes;
  Eigen::VectorXd weights;

  Index size() const { return weights.size(); }
};

/// q-point Gauss-Hermite rule for the standard normal measure (Golub-Welsch
/// nodes, Christoffel-sum weights evaluated with running rescaling so large q
/// does not overflow). Nodes whose weight falls below `relative_floor` times
/// the largest weight are dropped.
QuadratureRule gauss_hermite(Index q, double relative_floor = 1e-32);

/// q-point Gauss-Legendre rule for the uniform probability measure on [lower, upper].
QuadratureRule gauss_legendre(Index q, double lower = -1.0, double upper = 1.0);

/// Rule for a density: Gauss-Hermite for Gaussian, Gauss-Legendre for uniform
/// (tensor products with ceil(q^(1/D)) points per axis when D > 1), and equal
/// weights on the reference sample for empirical densities.
QuadratureRule quadrature_for(const DensitySpec& density, Index q);

}  // namespace sgpr
