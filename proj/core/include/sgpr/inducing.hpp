#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sgpr/chol.hpp"
#include "sgpr/rng.hpp"
#include "sgpr/kernels.hpp"
#include "sgpr/spectrum.hpp"
#include "sgpr/svgp.hpp"

namespace sgpr {

/// Read access to K_ff entries, either from an assembled matrix or evaluated
/// on demand from (kernel, X). The referenced objects must outlive the source.
class GramSource {
 public:
  explicit GramSource(const Eigen::MatrixXd& kff);
  GramSource(const KernelSpec& kernel, const Eigen::MatrixXd& x);

  Index size() const { return n_; }
  double entry(Index i, Index j) const;
  double diag(Index i) const;
  /// out(r) = k(x_rows[r], x_j).
  void column(std::span<const Index> rows, Index j, Eigen::Ref<Eigen::VectorXd> out) const;
  void full_column(Index j, Eigen::Ref<Eigen::VectorXd> out) const;

 private:
  const Eigen::MatrixXd* kff_ = nullptr;
  const KernelSpec* kernel_ = nullptr;
  Eigen::MatrixXd scaled_;  // lazily evaluated form: one scaled point per column
  Index n_ = 0;
};

/// M distinct indices chosen uniformly (partial Fisher-Yates), sorted ascending.
std::vector<Index> uniform_subset(Index n, Index m, std::uint64_t seed);

/// Greedy determinant maximization: each step appends the index whose
/// conditional variance given the current selection is largest (that
/// variance is the factor by which the principal-minor determinant grows),
/// ties to the lowest index. Runs as a pivoted Cholesky in O(N M^2).
/// Throws DegenerateKernel when every remaining gain is at or below
/// chol::kAppendFloor times the diagonal before M indices are found.
std::vector<Index> greedy_det_init(const GramSource& gram, Index m);
/// The same selection, stopping without error at the first pivot below the
/// floor; its length is the numerical rank of K_ff when that is below M.
std::vector<Index> greedy_det_prefix(const GramSource& gram, Index m);
std::vector<Index> greedy_det_init(const KernelSpec& kernel, const Eigen::MatrixXd& x, Index m);

/// ceil(N M^2 log N + N M log(1/eps)). Throws InvalidEpsilon unless 0 < eps < 1.
std::uint64_t mixing_steps(Index n, Index m, double eps);

struct KdppStats {
  std::uint64_t steps = 0;
  std::uint64_t evaluated = 0;
  std::uint64_t accepted = 0;
  std::uint64_t singular_rejections = 0;
  std::uint64_t refactorizations = 0;
  double max_drift = 0.0;
};

/// Lazy Metropolis exchange chain on size-M subsets targeting P(S) ~ det K_S.
/// Step r draws i in S, j outside S and u ~ U[0,1) from the counter stream
/// (seed, stream) at positions 3r..3r+2, and moves to T = S - i + j with
/// probability 1/2 min(1, det K_T / det K_S). When u >= 1/2 the move is
/// rejected without evaluating the ratio. The ratio comes from
/// remove + append on a Cholesky workspace; a singular extension is a
/// rejection. The factor is rebuilt from scratch every `refactor_interval`
/// steps and the log-determinant drift recorded.
class KdppChain {
 public:
  using Observer = std::function<void(std::uint64_t step, std::span<const Index> subset)>;

  KdppChain(const GramSource& gram, std::vector<Index> initial, std::uint64_t seed, std::uint64_t stream = 0,
            std::uint64_t refactor_interval = 10000);

  void step();
  /// Runs `steps` more steps, calling the observer after each one.
  void run(std::uint64_t steps, const Observer& observer = {});

  /// Current members in factor order.
  std::span<const Index> members() const { return members_; }
  std::vector<Index> sorted_subset() const;
  double log_det() const { return current_.log_det(); }
  const KdppStats& stats() const { return stats_; }
  chol::LowerFactor factor() const { return current_.snapshot(); }

 private:
  void refactor();

  const GramSource& gram_;
  CounterRng rng_;
  std::vector<Index> members_;
  std::vector<Index> outside_;
  chol::FactorWorkspace current_;
  chol::FactorWorkspace trial_;
  Eigen::VectorXd kcol_;
  std::vector<Index> trial_rows_;
  std::uint64_t refactor_interval_;
  KdppStats stats_;
};

/// greedy_det_init followed by `steps` chain steps; sorted result.
std::vector<Index> kdpp_mcmc(const GramSource& gram, Index m, std::uint64_t steps, std::uint64_t seed,
                             std::uint64_t stream = 0, KdppStats* stats = nullptr);
std::vector<Index> kdpp_mcmc(const KernelSpec& kernel, const Eigen::MatrixXd& x, Index m, std::uint64_t steps,
                             std::uint64_t seed);

struct KdppTable {
  std::vector<std::vector<Index>> subsets;  // lexicographic order
  std::vector<double> probabilities;

  /// Position of a sorted subset in `subsets`.
  std::size_t rank(std::span<const Index> sorted_subset) const;
  Index n = 0;
};

/// All C(N, M) subsets with probability proportional to det K_S (negative
/// round-off determinants count as 0). Throws EnumerationTooLarge above 10^6 subsets.
KdppTable exact_kdpp_enumeration(const Eigen::MatrixXd& kff, Index m);
KdppTable exact_kdpp_enumeration(const KernelSpec& kernel, const Eigen::MatrixXd& x, Index m);

/// Top-M eigenpairs of K_ff (descending). Throws EigenFailure when the solver
/// fails or lambda_M is not positive.
EigenvectorFeatures eigenvector_features(const Eigen::MatrixXd& kff, const Eigen::MatrixXd& x, Index m);
EigenvectorFeatures eigenvector_features(const KernelSpec& kernel, const Eigen::MatrixXd& x, Index m);

/// Eigenfunction features from the Nyström basis of (kernel, density); lambda
/// from the closed form for 1-D SE with Gaussian inputs, otherwise the
/// numeric eigenvalues.
EigenfunctionFeatures eigenfunction_features(const KernelSpec& kernel, const DensitySpec& density, Index m,
                                             Index q = 2048);

/// "run_id,method,seed,i1 i2 ..." with indices sorted ascending.
std::string selection_csv_line(const std::string& run_id, const std::string& method, std::uint64_t seed,
                               std::vector<Index> indices);

}  // namespace sgpr
