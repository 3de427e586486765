#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sgpr/kernels.hpp"

namespace sgpr::harness {

/// Numeric result columns in CSV order (after experiment, seed, n, m, method).
enum class Col : int {
  t,
  lambda_max,
  elbo,
  log_marginal,
  upper,
  upper_refined,
  upper_gap,
  refined_gap,
  kl_exact,
  kl_mc_mean,
  kl_mc_se,
  norm_y_sq,
  jitter_used,
  lemma1,
  lemma1_loose,
  lemma2_lo,
  lemma2_hi,
  thm1,
  thm2,
  thm3,
  thm4,
  operator_tail,
  eps,
  chain_steps,
  chain_acceptance,
  prop1_eps,
  prop1_mean_dev,
  prop1_mean_dev_weak,
  prop1_var_lo,
  prop1_var_hi,
  prop1_obs_mean_dev,
  prop1_obs_var_ratio_lo,
  prop1_obs_var_ratio_hi,
  mean_nn_distance,
  lengthscale,
  kCount
};

inline constexpr std::size_t kNumCols = static_cast<std::size_t>(Col::kCount);

std::string_view column_name(Col c);

/// Missing numeric values are NaN and serialize as empty fields.
struct ResultRow {
  std::string experiment;
  std::uint64_t seed = 0;
  Index n = 0;
  Index m = 0;
  std::string method;
  std::array<double, kNumCols> values{};
  /// Semicolon-separated invariant violations; empty when all hold.
  std::string flags;

  ResultRow();
  double& operator[](Col c) { return values[static_cast<std::size_t>(c)]; }
  double operator[](Col c) const { return values[static_cast<std::size_t>(c)]; }
  void add_flag(const std::string& flag);
};

/// Wall time per phase, kept in a separate file so result CSVs stay
/// byte-identical across runs.
struct TimingRow {
  std::string experiment;
  std::uint64_t seed = 0;
  Index n = 0;
  Index m = 0;
  std::string method;
  double selection_s = 0.0;
  double solve_s = 0.0;
  double bounds_s = 0.0;
};

std::string csv_header();
std::string format_row(const ResultRow& row);
/// Shortest round-trip decimal form.
std::string format_double(double x);

/// Rows sorted by (experiment, seed, n, m, method) before writing. Throws IoError.
void emit_csv(std::vector<ResultRow> rows, const std::string& path);
void emit_timing_csv(std::vector<TimingRow> rows, const std::string& path);
/// Parses a file written by emit_csv. Throws IoError on malformed input.
std::vector<ResultRow> read_csv(const std::string& path);
std::vector<ResultRow> parse_csv(const std::string& text);

void sort_rows(std::vector<ResultRow>& rows);

}  // namespace sgpr::harness
