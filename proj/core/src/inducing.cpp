#include "sgpr/inducing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "sgpr/errors.hpp"

namespace sgpr {

GramSource::GramSource(const Eigen::MatrixXd& kff) : kff_(&kff), n_(kff.rows()) {
  if (kff.rows() != kff.cols()) throw DimensionMismatch("GramSource: K_ff must be square");
}

GramSource::GramSource(const KernelSpec& kernel, const Eigen::MatrixXd& x) : kernel_(&kernel), n_(x.rows()) {
  if (x.cols() != kernel.dim()) throw DimensionMismatch("GramSource: input dimension differs from kernel");
  scaled_ = x.transpose();
  scaled_.array().colwise() /= kernel.lengthscales.array();
}

double GramSource::entry(Index i, Index j) const {
  if (kff_) return (*kff_)(i, j);
  if (kernel_->family == KernelFamily::SquaredExponential) {
    return kernel_->variance * std::exp(-0.5 * (scaled_.col(i) - scaled_.col(j)).squaredNorm());
  }
  double value = kernel_->variance;
  for (Index d = 0; d < scaled_.rows(); ++d) {
    value *= matern_profile(kernel_->order, std::abs(scaled_(d, i) - scaled_(d, j)));
  }
  return value;
}

double GramSource::diag(Index i) const { return kff_ ? (*kff_)(i, i) : kernel_->variance; }

void GramSource::column(std::span<const Index> rows, Index j, Eigen::Ref<Eigen::VectorXd> out) const {
  if (kff_) {
    const double* col = kff_->col(j).data();
    for (std::size_t r = 0; r < rows.size(); ++r) out(static_cast<Index>(r)) = col[rows[r]];
    return;
  }
  for (std::size_t r = 0; r < rows.size(); ++r) out(static_cast<Index>(r)) = entry(rows[r], j);
}

void GramSource::full_column(Index j, Eigen::Ref<Eigen::VectorXd> out) const {
  if (kff_) {
    out = kff_->col(j);
    return;
  }
  for (Index i = 0; i < n_; ++i) out(i) = entry(i, j);
}

std::vector<Index> uniform_subset(Index n, Index m, std::uint64_t seed) {
  if (m > n) throw MTooLarge("uniform_subset: M = " + std::to_string(m) + " exceeds N = " + std::to_string(n));
  if (m < 0) throw InvalidHyperparameter("uniform_subset: negative M");
  std::vector<Index> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), Index{0});
  CounterRng rng(seed, 0x756e69666f726dULL);
  for (Index k = 0; k < m; ++k) {
    const Index pick = k + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n - k)));
    std::swap(pool[k], pool[pick]);
  }
  pool.resize(static_cast<std::size_t>(m));
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::vector<Index> greedy_det_prefix(const GramSource& gram, Index m) {
  const Index n = gram.size();
  if (m > n) throw MTooLarge("greedy_det_init: M = " + std::to_string(m) + " exceeds N = " + std::to_string(n));
  std::vector<Index> chosen;
  chosen.reserve(static_cast<std::size_t>(m));
  Eigen::VectorXd resid(n);
  for (Index i = 0; i < n; ++i) resid(i) = gram.diag(i);
  std::vector<bool> taken(static_cast<std::size_t>(n), false);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, m);
  Eigen::VectorXd kcol(n);
  for (Index s = 0; s < m; ++s) {
    Index best = -1;
    double best_gain = -std::numeric_limits<double>::infinity();
    for (Index i = 0; i < n; ++i) {
      if (!taken[i] && resid(i) > best_gain) {
        best_gain = resid(i);
        best = i;
      }
    }
    if (best < 0 || !(best_gain > chol::kAppendFloor * gram.diag(best))) break;
    gram.full_column(best, kcol);
    Eigen::VectorXd col = kcol;
    if (s > 0) col.noalias() -= c.leftCols(s) * c.row(best).head(s).transpose();
    col /= std::sqrt(best_gain);
    c.col(s) = col;
    resid.array() -= col.array().square();
    taken[best] = true;
    chosen.push_back(best);
  }
  return chosen;
}

std::vector<Index> greedy_det_init(const GramSource& gram, Index m) {
  auto chosen = greedy_det_prefix(gram, m);
  if (static_cast<Index>(chosen.size()) < m) {
    throw DegenerateKernel("greedy_det_init: only " + std::to_string(chosen.size()) + " of " + std::to_string(m) +
                           " columns are numerically independent");
  }
  return chosen;
}

std::vector<Index> greedy_det_init(const KernelSpec& kernel, const Eigen::MatrixXd& x, Index m) {
  return greedy_det_init(GramSource(kernel, x), m);
}

std::uint64_t mixing_steps(Index n, Index m, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidEpsilon("mixing_steps: epsilon must lie in (0, 1)");
  const long double nn = static_cast<long double>(n);
  const long double mm = static_cast<long double>(m);
  const long double r = nn * mm * mm * std::log(nn) + nn * mm * std::log(1.0L / static_cast<long double>(eps));
  return static_cast<std::uint64_t>(std::ceil(r));
}

KdppChain::KdppChain(const GramSource& gram, std::vector<Index> initial, std::uint64_t seed, std::uint64_t stream,
                     std::uint64_t refactor_interval)
    : gram_(gram),
      rng_(seed, stream),
      members_(std::move(initial)),
      current_(static_cast<Index>(members_.size())),
      trial_(static_cast<Index>(members_.size())),
      kcol_(static_cast<Index>(members_.size())),
      refactor_interval_(refactor_interval) {
  const Index n = gram_.size();
  std::vector<bool> in(static_cast<std::size_t>(n), false);
  for (Index i : members_) {
    if (i < 0 || i >= n || in[i]) throw IndexOutOfRange("KdppChain: initial subset has invalid or repeated index");
    in[i] = true;
  }
  for (Index i = 0; i < n; ++i)
    if (!in[i]) outside_.push_back(i);
  trial_rows_.reserve(members_.size());
  refactor();
  stats_.refactorizations = 0;
  stats_.max_drift = 0.0;
}

void KdppChain::refactor() {
  const Index m = static_cast<Index>(members_.size());
  Eigen::MatrixXd ks(m, m);
  for (Index a = 0; a < m; ++a)
    for (Index b = 0; b < m; ++b) ks(a, b) = gram_.entry(members_[a], members_[b]);
  const double none[] = {0.0};
  const auto fresh = chol::factor(ks, none);
  if (current_.dim() == m && m > 0) {
    stats_.max_drift = std::max(stats_.max_drift, std::abs(chol::log_det(fresh) - current_.log_det()));
  }
  current_.assign(fresh);
  trial_.assign(fresh);
  ++stats_.refactorizations;
}

void KdppChain::step() {
  const std::uint64_t r = stats_.steps++;
  const Index m = static_cast<Index>(members_.size());
  const Index out = static_cast<Index>(outside_.size());
  if (m > 0 && out > 0) {
    rng_.seek(3 * r);
    const Index pos = static_cast<Index>(rng_.below(static_cast<std::uint64_t>(m)));
    const Index jpos = static_cast<Index>(rng_.below(static_cast<std::uint64_t>(out)));
    const double u = rng_.uniform();
    if (u < 0.5) {
      ++stats_.evaluated;
      const Index j = outside_[jpos];
      trial_rows_.clear();
      for (Index a = 0; a < m; ++a)
        if (a != pos) trial_rows_.push_back(members_[a]);
      auto kc = kcol_.head(m - 1);
      gram_.column(trial_rows_, j, kc);
      trial_.remove(pos);
      if (!trial_.append(kc, gram_.diag(j))) {
        ++stats_.singular_rejections;
        trial_.restore_after_swap(current_, pos);
      } else {
        // det K_T / det K_S: only diagonal entries from `pos` on differ.
        const auto lt = trial_.view();
        const auto ls = current_.view();
        double q = 1.0;
        for (Index k = pos; k < m; ++k) q *= lt(k, k) / ls(k, k);
        const double ratio = q * q;
        if (2.0 * u < ratio) {
          ++stats_.accepted;
          std::swap(current_, trial_);
          trial_.restore_after_swap(current_, pos);
          const Index i = members_[pos];
          members_.erase(members_.begin() + pos);
          members_.push_back(j);
          outside_[jpos] = i;
        } else {
          trial_.restore_after_swap(current_, pos);
        }
      }
    }
  }
  if (refactor_interval_ > 0 && stats_.steps % refactor_interval_ == 0) refactor();
}

void KdppChain::run(std::uint64_t steps, const Observer& observer) {
  for (std::uint64_t s = 0; s < steps; ++s) {
    step();
    if (observer) observer(stats_.steps, members_);
  }
}

std::vector<Index> KdppChain::sorted_subset() const {
  std::vector<Index> s = members_;
  std::sort(s.begin(), s.end());
  return s;
}

std::vector<Index> kdpp_mcmc(const GramSource& gram, Index m, std::uint64_t steps, std::uint64_t seed,
                             std::uint64_t stream, KdppStats* stats) {
  auto init = greedy_det_init(gram, m);
  if (steps == 0 || m == gram.size()) {
    std::sort(init.begin(), init.end());
    return init;
  }
  KdppChain chain(gram, std::move(init), seed, stream);
  chain.run(steps);
  if (stats) *stats = chain.stats();
  return chain.sorted_subset();
}

std::vector<Index> kdpp_mcmc(const KernelSpec& kernel, const Eigen::MatrixXd& x, Index m, std::uint64_t steps,
                             std::uint64_t seed) {
  if (m >= x.rows() && m > 0 && steps > 0) {
    throw MTooLarge("kdpp_mcmc: chain needs M < N");
  }
  return kdpp_mcmc(GramSource(kernel, x), m, steps, seed);
}

std::size_t KdppTable::rank(std::span<const Index> sorted_subset) const {
  const std::vector<Index> key(sorted_subset.begin(), sorted_subset.end());
  const auto it = std::lower_bound(subsets.begin(), subsets.end(), key);
  if (it == subsets.end() || *it != key) throw IndexOutOfRange("KdppTable::rank: subset not in table");
  return static_cast<std::size_t>(it - subsets.begin());
}

KdppTable exact_kdpp_enumeration(const Eigen::MatrixXd& kff, Index m) {
  const Index n = kff.rows();
  if (m < 0 || m > n) throw MTooLarge("exact_kdpp_enumeration: M outside [0, N]");
  double count = 1.0;
  for (Index k = 0; k < m; ++k) count = count * static_cast<double>(n - k) / static_cast<double>(k + 1);
  if (count > 1e6 + 0.5) {
    throw EnumerationTooLarge("exact_kdpp_enumeration: C(" + std::to_string(n) + ", " + std::to_string(m) +
                              ") exceeds 10^6 subsets");
  }
  KdppTable table;
  table.n = n;
  std::vector<Index> idx(static_cast<std::size_t>(m));
  std::iota(idx.begin(), idx.end(), Index{0});
  Eigen::MatrixXd sub(m, m);
  double total = 0.0;
  while (true) {
    for (Index a = 0; a < m; ++a)
      for (Index b = 0; b < m; ++b) sub(a, b) = kff(idx[a], idx[b]);
    const double det = m == 0 ? 1.0 : std::max(sub.determinant(), 0.0);
    table.subsets.push_back(idx);
    table.probabilities.push_back(det);
    total += det;
    // Next combination in lexicographic order.
    Index k = m - 1;
    while (k >= 0 && idx[k] == n - m + k) --k;
    if (k < 0) break;
    ++idx[k];
    for (Index r = k + 1; r < m; ++r) idx[r] = idx[r - 1] + 1;
  }
  if (!(total > 0.0)) throw DegenerateKernel("exact_kdpp_enumeration: every subset has zero determinant");
  for (double& p : table.probabilities) p /= total;
  return table;
}

KdppTable exact_kdpp_enumeration(const KernelSpec& kernel, const Eigen::MatrixXd& x, Index m) {
  return exact_kdpp_enumeration(gram(kernel, x), m);
}

EigenvectorFeatures eigenvector_features(const Eigen::MatrixXd& kff, const Eigen::MatrixXd& x, Index m) {
  const Index n = kff.rows();
  if (m > n) throw MTooLarge("eigenvector_features: M exceeds N");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(kff);
  if (solver.info() != Eigen::Success) throw EigenFailure("eigenvector_features: eigendecomposition failed");
  EigenvectorFeatures f;
  f.lambda = solver.eigenvalues().tail(m).reverse();
  f.W = solver.eigenvectors().rightCols(m).rowwise().reverse();
  f.X = x;
  if (m > 0 && !(f.lambda(m - 1) > 0.0)) {
    throw EigenFailure("eigenvector_features: eigenvalue " + std::to_string(m) + " of K_ff is not positive");
  }
  return f;
}

EigenvectorFeatures eigenvector_features(const KernelSpec& kernel, const Eigen::MatrixXd& x, Index m) {
  return eigenvector_features(gram(kernel, x), x, m);
}

EigenfunctionFeatures eigenfunction_features(const KernelSpec& kernel, const DensitySpec& density, Index m, Index q) {
  auto basis = std::make_shared<NystromSpectrum>(nystrom_spectrum(kernel, density, m, q));
  EigenfunctionFeatures f;
  const auto* g = std::get_if<GaussianDensity>(&density.value);
  if (kernel.family == KernelFamily::SquaredExponential && g && kernel.dim() == 1) {
    f.lambda = se_gaussian_eigenvalues(kernel.variance, kernel.lengthscales(0), g->stddev(0), m);
  } else {
    f.lambda = basis->eigenvalues();
  }
  f.orthonormality_error = basis->orthonormality_error();
  f.phi = [basis](const Eigen::Ref<const Eigen::MatrixXd>& x) { return basis->evaluate(x); };
  return f;
}

std::string selection_csv_line(const std::string& run_id, const std::string& method, std::uint64_t seed,
                               std::vector<Index> indices) {
  std::sort(indices.begin(), indices.end());
  std::ostringstream os;
  os << run_id << ',' << method << ',' << seed << ',';
  for (std::size_t k = 0; k < indices.size(); ++k) os << (k ? " " : "") << indices[k];
  return os.str();
}

}  // namespace sgpr
