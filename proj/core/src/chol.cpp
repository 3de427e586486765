#include "sgpr/chol.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>

#include "sgpr/errors.hpp"

namespace sgpr::chol {

LowerFactor::LowerFactor(Eigen::MatrixXd lower, double jitter_used)
    : lower_(std::move(lower)), jitter_used_(jitter_used) {}

Eigen::MatrixXd LowerFactor::reconstruct() const {
  const auto l = lower_.triangularView<Eigen::Lower>();
  return l * lower_.transpose();
}

Eigen::MatrixXd LowerFactor::solve_lower(const Eigen::Ref<const Eigen::MatrixXd>& b) const {
  if (b.rows() != dim()) throw DimensionMismatch("solve_lower: right-hand side has wrong row count");
  return lower_.triangularView<Eigen::Lower>().solve(b);
}

Eigen::MatrixXd LowerFactor::solve(const Eigen::Ref<const Eigen::MatrixXd>& b) const {
  Eigen::MatrixXd x = solve_lower(b);
  lower_.triangularView<Eigen::Lower>().transpose().solveInPlace(x);
  return x;
}

std::vector<double> default_jitter_schedule(const Eigen::Ref<const Eigen::MatrixXd>& a) {
  const double scale = a.rows() > 0 ? a.diagonal().mean() : 1.0;
  return {0.0, 1e-10 * scale, 1e-8 * scale, 1e-6 * scale};
}

LowerFactor factor(const Eigen::Ref<const Eigen::MatrixXd>& a, std::span<const double> jitter_schedule) {
  if (a.rows() != a.cols()) throw DimensionMismatch("factor: matrix is not square");
  const Index n = a.rows();
  if (n == 0) return LowerFactor(Eigen::MatrixXd(0, 0), 0.0);

  const double scale = a.cwiseAbs().maxCoeff();
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * scale) {
    throw AsymmetricInput("factor: asymmetry " + std::to_string(asym) + " exceeds tolerance");
  }

  for (const double jitter : jitter_schedule) {
    if (jitter < 0.0) throw InvalidHyperparameter("factor: negative jitter in schedule");
    Eigen::MatrixXd shifted = a;
    shifted.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() != Eigen::Success) continue;
    Eigen::MatrixXd lower = llt.matrixL();
    if ((lower.diagonal().array() > 0.0).all() && lower.allFinite()) {
      return LowerFactor(std::move(lower), jitter);
    }
  }
  throw NotFactorizable("factor: all jitter levels failed for " + std::to_string(n) + "x" +
                        std::to_string(n) + " matrix");
}

LowerFactor factor(const Eigen::Ref<const Eigen::MatrixXd>& a) {
  const auto schedule = default_jitter_schedule(a);
  return factor(a, schedule);
}

namespace detail {

void rank_one_update_inplace(Eigen::Ref<Eigen::MatrixXd> l, Eigen::Ref<Eigen::VectorXd> x) {
  const Index n = l.rows();
  for (Index k = 0; k < n; ++k) {
    const double lkk = l(k, k);
    const double xk = x(k);
    if (xk == 0.0) continue;
    // Factors here have entries of order sqrt(max diag), so the plain root
    // cannot overflow and is several times cheaper than hypot.
    const double r = std::sqrt(lkk * lkk + xk * xk);
    const double c = r / lkk;
    const double s = xk / lkk;
    const double inv_c = lkk / r;
    l(k, k) = r;
    const Index tail = n - k - 1;
    if (tail == 0) break;
    double* col = l.col(k).data() + k + 1;
    double* xt = x.data() + k + 1;
    for (Index j = 0; j < tail; ++j) {
      const double lj = (col[j] + s * xt[j]) * inv_c;
      col[j] = lj;
      xt[j] = c * xt[j] - s * lj;
    }
  }
}

}  // namespace detail

LowerFactor rank_one_update(const LowerFactor& factor, const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() != factor.dim()) throw DimensionMismatch("rank_one_update: vector length differs from factor");
  Eigen::MatrixXd l = factor.matrix();
  Eigen::VectorXd x = v;
  detail::rank_one_update_inplace(l, x);
  return LowerFactor(std::move(l), factor.jitter_used());
}

LowerFactor remove_index(const LowerFactor& factor, Index i) {
  if (i < 0 || i >= factor.dim()) {
    throw IndexOutOfRange("remove_index: index " + std::to_string(i) + " outside [0, " +
                          std::to_string(factor.dim()) + ")");
  }
  FactorWorkspace ws(factor.dim());
  ws.assign(factor);
  ws.remove(i);
  return ws.snapshot(factor.jitter_used());
}

LowerFactor append_index(const LowerFactor& factor, const Eigen::Ref<const Eigen::VectorXd>& k_cross,
                         double k_self) {
  if (k_cross.size() != factor.dim()) throw DimensionMismatch("append_index: k_cross length differs from factor");
  FactorWorkspace ws(factor.dim() + 1);
  ws.assign(factor);
  if (!(k_self > 0.0) || !ws.append(k_cross, k_self)) {
    throw NotPositiveDefinite("append_index: extension is numerically singular");
  }
  return ws.snapshot(factor.jitter_used());
}

double log_det(const LowerFactor& factor) {
  return 2.0 * factor.matrix().diagonal().array().log().sum();
}

FactorWorkspace::FactorWorkspace(Index capacity)
    : buffer_(Eigen::MatrixXd::Zero(capacity, capacity)), scratch_(capacity) {}

void FactorWorkspace::assign(const LowerFactor& factor) {
  const Index n = factor.dim();
  if (n > capacity()) {
    buffer_ = Eigen::MatrixXd::Zero(n, n);
    scratch_.resize(n);
  }
  buffer_.topLeftCorner(n, n) = factor.matrix().triangularView<Eigen::Lower>();
  n_ = n;
}

void FactorWorkspace::assign(const FactorWorkspace& other) {
  if (other.n_ > capacity()) {
    buffer_ = Eigen::MatrixXd::Zero(other.capacity(), other.capacity());
    scratch_.resize(other.capacity());
  }
  buffer_.topLeftCorner(other.n_, other.n_) = other.buffer_.topLeftCorner(other.n_, other.n_);
  n_ = other.n_;
}

void FactorWorkspace::remove(Index i) {
  if (i < 0 || i >= n_) {
    throw IndexOutOfRange("FactorWorkspace::remove: index " + std::to_string(i) + " outside [0, " +
                          std::to_string(n_) + ")");
  }
  const Index n = n_;
  const Index tail = n - i - 1;
  // l32 = L(i+1:n, i), the column below the removed pivot.
  auto l32 = scratch_.head(tail);
  l32 = buffer_.col(i).segment(i + 1, tail);

  // Rows below i move up one place in the columns left of i.
  for (Index c = 0; c < i; ++c) {
    double* col = buffer_.col(c).data();
    std::copy(col + i + 1, col + n, col + i);
  }
  // The trailing block L33 moves up and left one place.
  for (Index c = i + 1; c < n; ++c) {
    const Index len = n - c;
    buffer_.col(c - 1).segment(c - 1, len) = buffer_.col(c).segment(c, len);
    buffer_(c - 1 + len, c - 1) = 0.0;
  }
  buffer_.row(n - 1).head(n).setZero();
  buffer_.col(n - 1).head(n).setZero();

  // L33' L33'^T = L33 L33^T + l32 l32^T.
  if (tail > 0) {
    detail::rank_one_update_inplace(buffer_.block(i, i, tail, tail), l32);
  }
  n_ = n - 1;
}

bool FactorWorkspace::append(const Eigen::Ref<const Eigen::VectorXd>& k_cross, double k_self) {
  if (k_cross.size() != n_) throw DimensionMismatch("FactorWorkspace::append: k_cross length differs from factor");
  if (n_ + 1 > capacity()) {
    Eigen::MatrixXd grown = Eigen::MatrixXd::Zero(n_ + 1, n_ + 1);
    grown.topLeftCorner(n_, n_) = buffer_.topLeftCorner(n_, n_);
    buffer_ = std::move(grown);
    scratch_.resize(n_ + 1);
  }
  auto c = scratch_.head(n_);
  c = k_cross;
  buffer_.topLeftCorner(n_, n_).triangularView<Eigen::Lower>().solveInPlace(c);
  const double d2 = k_self - c.squaredNorm();
  if (!(d2 > kAppendFloor * k_self) || !std::isfinite(d2)) return false;
  buffer_.row(n_).head(n_) = c.transpose();
  buffer_(n_, n_) = std::sqrt(d2);
  ++n_;
  return true;
}

double FactorWorkspace::log_det() const {
  return 2.0 * buffer_.diagonal().head(n_).array().log().sum();
}

LowerFactor FactorWorkspace::snapshot(double jitter_used) const {
  return LowerFactor(Eigen::MatrixXd(buffer_.topLeftCorner(n_, n_)), jitter_used);
}

void FactorWorkspace::restore_after_swap(const FactorWorkspace& other, Index i) {
  const Index n = other.n_;
  for (Index c = 0; c < n; ++c) {
    const Index r0 = std::max(c, i);
    buffer_.col(c).segment(r0, n - r0) = other.buffer_.col(c).segment(r0, n - r0);
  }
  n_ = n;
}

}  // namespace sgpr::chol
