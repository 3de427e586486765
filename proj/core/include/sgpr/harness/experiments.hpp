#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sgpr/gp_exact.hpp"
#include "sgpr/harness/config.hpp"
#include "sgpr/harness/csv.hpp"
#include "sgpr/spectrum.hpp"
#include "sgpr/svgp.hpp"

namespace sgpr::harness {

/// One regression instance: inputs drawn from the configured density and
/// outputs from the prior, both keyed by (seed, N).
struct Instance {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Eigen::MatrixXd kff;
  /// Factorized K_ff + sigma^2 I, shared by sampling and evaluation.
  std::shared_ptr<const ExactGp> exact;
};

Instance make_instance(const ExperimentConfig& config, Index n, std::uint64_t seed);

struct Selection {
  InducingSet inducing;
  std::vector<Index> indices;  // points methods only
  double eps = 0.0;
  std::uint64_t chain_steps = 0;
  double acceptance = 0.0;
  bool chain_capped = false;
  /// Greedy selection hit the pivot floor before M; inducing holds the
  /// numerically independent prefix and requested_m the configured M.
  bool rank_capped = false;
  Index requested_m = 0;
};

/// M for a given N under the configured rule; `m_value` is used by the fixed rule.
Index resolve_m(const ExperimentConfig& config, Index n, Index m_value);

/// Coefficients (C, C0) of M = ceil(C log N + C0) for the log rule.
std::pair<double, double> log_rule_coefficients(const ExperimentConfig& config);

/// k-DPP epsilon used at size N (configured value or N^-3).
double chain_eps(const ExperimentConfig& config, Index n);
/// Chain length at (N, M) and whether the cap was applied.
std::pair<std::uint64_t, bool> chain_length(const ExperimentConfig& config, Index n, Index m);

Selection select_inducing(const ExperimentConfig& config, const Instance& instance, Index m, std::uint64_t seed);

/// Operator spectrum of (kernel, density): closed form for SE with Gaussian
/// inputs, the numeric Nyström spectrum otherwise.
SpectrumTail operator_spectrum(const ExperimentConfig& config);

/// Every BoundReport quantity for one (instance, selection), with invariant
/// violations recorded in row.flags. Informational notes carry an "info:" prefix.
ResultRow evaluate(const ExperimentConfig& config, const Instance& instance, const Selection& selection,
                   const SpectrumTail& spectrum, std::uint64_t seed, TimingRow* timing = nullptr);

bool row_has_violation(const ResultRow& row);

struct RunResult {
  std::vector<ResultRow> rows;
  std::vector<TimingRow> timings;
  std::vector<std::string> selections;  // selection CSV lines
  std::vector<std::string> warnings;
  std::string strip_svg;  // dispersion demo only

  bool has_violation() const;
};

RunResult run_fixed_m(const ExperimentConfig& config);
RunResult run_m_sweep(const ExperimentConfig& config);
RunResult run_log_schedule(const ExperimentConfig& config);
RunResult run_dispersion(const ExperimentConfig& config);
RunResult run_experiment(const ExperimentConfig& config);

/// Mean distance from each point to its nearest neighbour in the set (1-D rows or general).
double mean_nearest_neighbor_distance(const Eigen::MatrixXd& points);

/// Calls fn(i) for i in [0, count) on up to `threads` workers (0 = hardware
/// concurrency). Exceptions are rethrown on the calling thread.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace sgpr::harness
