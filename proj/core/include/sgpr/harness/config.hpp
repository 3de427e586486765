#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sgpr/bounds.hpp"
#include "sgpr/gp_exact.hpp"
#include "sgpr/kernels.hpp"

namespace sgpr::harness {

enum class ExperimentKind { FixedM, MSweep, LogSchedule, Dispersion, OracleSuite };
enum class MRule { Fixed, LogN, Power, ScheduleSe1d, ScheduleMatern };
enum class Method { PointsKdpp, PointsUniform, PointsGreedy, Eigvec, Eigfunc };

std::string to_string(ExperimentKind kind);
std::string to_string(MRule rule);
std::string to_string(Method method);
ExperimentKind parse_experiment_kind(const std::string& text);
MRule parse_m_rule(const std::string& text);
Method parse_method(const std::string& text);

/// One experiment block. Defaults follow docs/config_reference.md.
struct ExperimentConfig {
  std::string name = "experiment";
  ExperimentKind kind = ExperimentKind::FixedM;

  KernelSpec kernel = KernelSpec::squared_exponential(1.0, 0.6);
  DensitySpec density = DensitySpec::gaussian(0.0, 1.0);
  NoiseModel noise{1.0};

  std::vector<Index> n_grid{1000};
  /// M values for fixed and m-sweep runs.
  std::vector<Index> m_values{15};
  MRule m_rule = MRule::Fixed;
  /// M = ceil(m_c log N + m_c0) for the log rule; unset means the
  /// coefficients of m_schedule_se_1d under `schedule`.
  std::optional<double> m_c;
  std::optional<double> m_c0;
  double m_alpha = 0.5;
  ScheduleParams schedule{};
  MaternMode matern_mode = MaternMode::Average;

  Method method = Method::PointsKdpp;
  std::vector<std::uint64_t> seeds{1};
  /// Prior output draws per input set used for the Monte Carlo KL mean (0 = off).
  Index y_draws = 0;
  /// k-DPP epsilon; unset means N^-3.
  std::optional<double> eps;
  /// Exact chain length; unset means min(mixing_steps(N, M, eps), chain_cap).
  std::optional<std::uint64_t> chain_steps;
  std::uint64_t chain_cap = 20000000;
  /// Confidence used for the theorem columns.
  double delta = 0.1;
  Index dense_limit = 5000;
  /// Quadrature size for spectra that have no closed form.
  Index spectrum_q = 512;
  /// Training rows used as probe points for the pointwise posterior bounds.
  Index probe_points = 16;
  /// Lengthscales compared by the dispersion demo.
  std::vector<double> dispersion_lengthscales{2.0, 0.5};
  unsigned threads = 0;
  bool emit_svg = true;
};

/// Parses every section of an INI file into experiment blocks (section name
/// becomes the experiment name). Throws ConfigError with the offending key.
std::vector<ExperimentConfig> load_config(const std::string& path);
std::vector<ExperimentConfig> parse_config(const std::string& text);

/// Built-in block for a subcommand run without a config file: the published
/// figure setting for that experiment kind.
ExperimentConfig default_experiment(ExperimentKind kind);

}  // namespace sgpr::harness
