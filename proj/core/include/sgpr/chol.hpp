#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

namespace sgpr::chol {

using Index = Eigen::Index;

/// Relative pivot floor for append_index: an extension whose conditional
/// variance d^2 is at most kAppendFloor * k_self is rejected.
inline constexpr double kAppendFloor = 1e-12;

/// Immutable lower Cholesky factor L with L L^T = A + jitter_used * I.
class LowerFactor {
 public:
  LowerFactor() = default;
  LowerFactor(Eigen::MatrixXd lower, double jitter_used);

  const Eigen::MatrixXd& matrix() const { return lower_; }
  Index dim() const { return lower_.rows(); }
  double jitter_used() const { return jitter_used_; }

  Eigen::MatrixXd reconstruct() const;

  /// Solves L x = b.
  Eigen::MatrixXd solve_lower(const Eigen::Ref<const Eigen::MatrixXd>& b) const;
  /// Solves (L L^T) x = b.
  Eigen::MatrixXd solve(const Eigen::Ref<const Eigen::MatrixXd>& b) const;

 private:
  Eigen::MatrixXd lower_;
  double jitter_used_ = 0.0;
};

/// [0, 1e-10, 1e-8, 1e-6] * mean(diag(A)).
std::vector<double> default_jitter_schedule(const Eigen::Ref<const Eigen::MatrixXd>& a);

/// Factorizes A + j I for the first j in the schedule that succeeds.
/// Schedule entries are absolute diagonal shifts.
/// Throws AsymmetricInput when |A - A^T|_max > 1e-10 |A|_max, NotFactorizable
/// when every jitter level fails.
LowerFactor factor(const Eigen::Ref<const Eigen::MatrixXd>& a, std::span<const double> jitter_schedule);
LowerFactor factor(const Eigen::Ref<const Eigen::MatrixXd>& a);

/// L' with L' L'^T = L L^T + v v^T, O(M^2).
LowerFactor rank_one_update(const LowerFactor& factor, const Eigen::Ref<const Eigen::VectorXd>& v);

/// Factor of the source matrix with row/column i deleted, O(M^2).
LowerFactor remove_index(const LowerFactor& factor, Index i);

/// Factor extended by a trailing row (c^T, d), c = L^{-1} k_cross,
/// d = sqrt(k_self - c^T c). Throws NotPositiveDefinite when
/// d^2 <= kAppendFloor * k_self.
LowerFactor append_index(const LowerFactor& factor, const Eigen::Ref<const Eigen::VectorXd>& k_cross,
                         double k_self);

/// 2 sum log L_ii.
double log_det(const LowerFactor& factor);

namespace detail {

/// In-place rank-one update of the lower-triangular block `l`; `x` is consumed.
void rank_one_update_inplace(Eigen::Ref<Eigen::MatrixXd> l, Eigen::Ref<Eigen::VectorXd> x);

}  // namespace detail

/// Mutable factor with a fixed capacity. Holds the same algorithms as the
/// value API but works in place, so a sampler can evaluate many candidate
/// swaps without allocating.
class FactorWorkspace {
 public:
  explicit FactorWorkspace(Index capacity = 0);

  void assign(const LowerFactor& factor);
  void assign(const FactorWorkspace& other);

  Index dim() const { return n_; }
  Index capacity() const { return buffer_.rows(); }
  auto view() const { return buffer_.topLeftCorner(n_, n_); }

  /// Deletes row/column i; dim() shrinks by one.
  void remove(Index i);
  /// Appends (c^T, d). Returns false, leaving the workspace unchanged, when
  /// d^2 <= kAppendFloor * k_self.
  bool append(const Eigen::Ref<const Eigen::VectorXd>& k_cross, double k_self);

  double log_det() const;
  LowerFactor snapshot(double jitter_used = 0.0) const;

  /// Copies from `other` only the entries a remove(i) + append() pair on this
  /// workspace can have altered, given both held the same factor beforehand.
  void restore_after_swap(const FactorWorkspace& other, Index i);

 private:
  Eigen::MatrixXd buffer_;
  Eigen::VectorXd scratch_;
  Index n_ = 0;
};

}  // namespace sgpr::chol
