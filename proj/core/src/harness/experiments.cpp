#include "sgpr/harness/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "sgpr/bounds.hpp"
#include "sgpr/errors.hpp"
#include "sgpr/gp_exact.hpp"
#include "sgpr/harness/svg.hpp"
#include "sgpr/inducing.hpp"

namespace sgpr::harness {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Stream identifiers; each (seed, N) pair owns a disjoint family of streams.
std::uint64_t stream_id(Index n, std::uint64_t purpose) { return (static_cast<std::uint64_t>(n) << 24) + purpose; }

constexpr std::uint64_t kStreamInputs = 1;
constexpr std::uint64_t kStreamOutputs = 2;
constexpr std::uint64_t kStreamSelection = 3;
constexpr std::uint64_t kStreamDraws = 1u << 20;

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& x, const std::vector<Index>& idx) {
  Eigen::MatrixXd out(static_cast<Index>(idx.size()), x.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Index>(k)) = x.row(idx[k]);
  return out;
}

std::vector<Index> all_indices(Index n) {
  std::vector<Index> out(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = i;
  return out;
}

void check_dense(const ExperimentConfig& config, Index n) {
  if (n > config.dense_limit) {
    throw DenseLimitExceeded("N = " + std::to_string(n) + " exceeds dense limit " +
                             std::to_string(config.dense_limit));
  }
}

std::string row_method(const ExperimentConfig& config) { return to_string(config.method); }

}  // namespace

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!failure) failure = std::current_exception();
          next.store(count);
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

bool RunResult::has_violation() const {
  return std::any_of(rows.begin(), rows.end(), row_has_violation);
}

bool row_has_violation(const ResultRow& row) {
  std::size_t start = 0;
  const std::string& f = row.flags;
  while (start < f.size()) {
    std::size_t end = f.find(';', start);
    if (end == std::string::npos) end = f.size();
    if (f.compare(start, 5, "info:") != 0) return true;
    start = end + 1;
  }
  return false;
}

Instance make_instance(const ExperimentConfig& config, Index n, std::uint64_t seed) {
  check_dense(config, n);
  Instance inst;
  inst.X = sample_inputs(config.density, n, seed, stream_id(n, kStreamInputs));
  inst.kff = gram(config.kernel, inst.X);
  inst.exact = std::make_shared<const ExactGp>(inst.X, inst.kff, config.kernel, config.noise);
  inst.y = inst.exact->sample(seed, stream_id(n, kStreamOutputs));
  return inst;
}

std::pair<double, double> log_rule_coefficients(const ExperimentConfig& config) {
  if (config.m_c && config.m_c0) return {*config.m_c, *config.m_c0};
  const auto* g = std::get_if<GaussianDensity>(&config.density.value);
  if (config.kernel.family != KernelFamily::SquaredExponential || !g || config.kernel.dim() != 1) {
    if (!config.m_c) throw ConfigError("log rule without m_c needs a 1-D SE kernel with Gaussian inputs");
    return {*config.m_c, config.m_c0.value_or(0.0)};
  }
  // ((3 + gamma) log N + log D~) / log(1/B) = C log N + C0.
  SeScheduleConstants k{config.kernel.variance, config.kernel.lengthscales(0), g->stddev(0), config.noise.variance};
  const auto s = m_schedule_se_1d(2, config.schedule, k);
  const double c = config.m_c.value_or((3.0 + config.schedule.gamma) / s.log_inv_b);
  const double c0 = config.m_c0.value_or(std::log(s.d_tilde) / s.log_inv_b);
  return {c, c0};
}

Index resolve_m(const ExperimentConfig& config, Index n, Index m_value) {
  Index m = 0;
  switch (config.m_rule) {
    case MRule::Fixed:
      m = m_value;
      break;
    case MRule::LogN: {
      const auto [c, c0] = log_rule_coefficients(config);
      m = static_cast<Index>(std::ceil(c * std::log(static_cast<double>(n)) + c0 - 1e-9));
      break;
    }
    case MRule::Power:
      m = static_cast<Index>(std::ceil(std::pow(static_cast<double>(n), config.m_alpha) - 1e-9));
      break;
    case MRule::ScheduleSe1d: {
      const auto* g = std::get_if<GaussianDensity>(&config.density.value);
      if (config.kernel.family != KernelFamily::SquaredExponential || !g || config.kernel.dim() != 1) {
        throw ConfigError("schedule-se needs a 1-D SE kernel with Gaussian inputs");
      }
      SeScheduleConstants k{config.kernel.variance, config.kernel.lengthscales(0), g->stddev(0),
                            config.noise.variance};
      m = m_schedule_se_1d(n, config.schedule, k).m;
      break;
    }
    case MRule::ScheduleMatern:
      if (config.kernel.family != KernelFamily::MaternHalfInteger) {
        throw ConfigError("schedule-matern needs a Matérn kernel");
      }
      m = m_schedule_matern(n, config.kernel.order, config.schedule.eps_prime, config.matern_mode);
      break;
  }
  return std::clamp<Index>(m, 0, n);
}

double chain_eps(const ExperimentConfig& config, Index n) {
  return config.eps.value_or(std::pow(static_cast<double>(n), -3.0));
}

std::pair<std::uint64_t, bool> chain_length(const ExperimentConfig& config, Index n, Index m) {
  if (config.chain_steps) return {*config.chain_steps, false};
  const std::uint64_t full = mixing_steps(n, m, chain_eps(config, n));
  if (full > config.chain_cap) return {config.chain_cap, true};
  return {full, false};
}

Selection select_inducing(const ExperimentConfig& config, const Instance& inst, Index m, std::uint64_t seed) {
  const Index n = inst.X.rows();
  Selection sel;
  sel.eps = config.method == Method::PointsKdpp ? chain_eps(config, n) : 0.0;
  switch (config.method) {
    case Method::PointsKdpp: {
      GramSource source(inst.kff);
      auto init = greedy_det_prefix(source, std::min(m, n));
      const Index usable = static_cast<Index>(init.size());
      if (usable < std::min(m, n)) {
        sel.rank_capped = true;
        sel.requested_m = m;
      }
      if (usable >= n) {
        sel.indices = all_indices(n);
      } else {
        const auto [steps, capped] = chain_length(config, n, usable);
        sel.chain_steps = steps;
        sel.chain_capped = capped;
        KdppChain chain(source, std::move(init), seed,
                        stream_id(n, kStreamSelection) + (static_cast<std::uint64_t>(m) << 8));
        chain.run(steps);
        sel.indices = chain.sorted_subset();
        const KdppStats& stats = chain.stats();
        sel.acceptance = stats.steps ? static_cast<double>(stats.accepted) / static_cast<double>(stats.steps) : 0.0;
      }
      sel.inducing = PointsSet{rows_of(inst.X, sel.indices)};
      break;
    }
    case Method::PointsUniform:
      sel.indices = uniform_subset(n, std::min(m, n), seed ^ stream_id(n, kStreamSelection));
      sel.inducing = PointsSet{rows_of(inst.X, sel.indices)};
      break;
    case Method::PointsGreedy: {
      sel.indices = greedy_det_prefix(GramSource(inst.kff), std::min(m, n));
      if (static_cast<Index>(sel.indices.size()) < std::min(m, n)) {
        sel.rank_capped = true;
        sel.requested_m = m;
      }
      std::sort(sel.indices.begin(), sel.indices.end());
      sel.inducing = PointsSet{rows_of(inst.X, sel.indices)};
      break;
    }
    case Method::Eigvec:
      sel.inducing = eigenvector_features(inst.kff, inst.X, std::min(m, n));
      break;
    case Method::Eigfunc:
      sel.inducing = eigenfunction_features(config.kernel, config.density, m, std::max<Index>(config.spectrum_q, 8 * m));
      break;
  }
  return sel;
}

SpectrumTail operator_spectrum(const ExperimentConfig& config) {
  const auto* g = std::get_if<GaussianDensity>(&config.density.value);
  if (config.kernel.family == KernelFamily::SquaredExponential && g) {
    if (config.kernel.dim() == 1) {
      return SpectrumTail::se_gaussian(config.kernel.variance, config.kernel.lengthscales(0), g->stddev(0));
    }
    return SpectrumTail::from_eigenvalues(
        se_ard_gaussian_spectrum(config.kernel.lengthscales, g->stddev, config.kernel.variance, 4000));
  }
  const auto spectrum = nystrom_spectrum(config.kernel, config.density, 1, std::max<Index>(config.spectrum_q, 8));
  return SpectrumTail::from_eigenvalues(spectrum.all_eigenvalues());
}

ResultRow evaluate(const ExperimentConfig& config, const Instance& inst, const Selection& sel,
                   const SpectrumTail& spectrum, std::uint64_t seed, TimingRow* timing) {
  const Index n = inst.X.rows();
  const Index m = inducing_count(sel.inducing);
  const double s2 = config.noise.variance;
  ResultRow row;
  row.experiment = config.name;
  row.seed = seed;
  row.n = n;
  row.m = m;
  row.method = row_method(config);

  auto start = Clock::now();
  const FeatureOperators ops = feature_operators(sel.inducing, config.kernel, inst.X);
  const SparseApproximation approx(ops);
  const ExactGp& exact = *inst.exact;
  const KlEvaluator kl(inst.kff, approx, config.noise);

  const double t = approx.trace_gap();
  const double lam = lambda_max_gap(inst.kff, approx);
  row[Col::t] = t;
  row[Col::lambda_max] = lam;
  row[Col::elbo] = approx.elbo(inst.y, config.noise);
  row[Col::log_marginal] = exact.log_marginal_likelihood(inst.y);
  row[Col::upper] = approx.upper_bound(inst.y, config.noise, t);
  row[Col::upper_refined] = approx.refined_upper_bound(inst.y, config.noise, lam);
  row[Col::upper_gap] = row[Col::upper] - row[Col::elbo];
  row[Col::refined_gap] = row[Col::upper_refined] - row[Col::elbo];
  row[Col::kl_exact] = kl(inst.y);
  row[Col::norm_y_sq] = inst.y.squaredNorm();
  row[Col::jitter_used] = std::max(approx.jitter_used(), exact.jitter_used());
  row[Col::eps] = sel.eps;
  if (std::holds_alternative<PointsSet>(sel.inducing) && config.method == Method::PointsKdpp) {
    row[Col::chain_steps] = static_cast<double>(sel.chain_steps);
    row[Col::chain_acceptance] = sel.acceptance;
  }
  if (config.y_draws > 0) {
    double sum = 0.0, sum_sq = 0.0;
    for (Index d = 0; d < config.y_draws; ++d) {
      const double v = kl(exact.sample(seed, stream_id(n, kStreamDraws + static_cast<std::uint64_t>(d))));
      sum += v;
      sum_sq += v * v;
    }
    const double k = static_cast<double>(config.y_draws);
    const double mean = sum / k;
    const double var = k > 1 ? std::max(sum_sq / k - mean * mean, 0.0) * k / (k - 1.0) : 0.0;
    row[Col::kl_mc_mean] = mean;
    row[Col::kl_mc_se] = std::sqrt(var / k);
  }
  const double solve_s = seconds_since(start);

  start = Clock::now();
  const auto l1 = lemma1(t, std::min(lam, t), row[Col::norm_y_sq], s2);
  row[Col::lemma1] = l1.tight;
  row[Col::lemma1_loose] = l1.loose;
  const auto l2 = lemma2_interval(t, s2);
  row[Col::lemma2_lo] = l2.lo;
  row[Col::lemma2_hi] = l2.hi;
  const double tail = spectrum.tail(m);
  row[Col::operator_tail] = tail;
  const double v = config.kernel.variance;
  row[Col::thm1] = thm1_from_tail(n, config.delta, row[Col::norm_y_sq], s2, tail);
  row[Col::thm2] = thm2_from_tail(n, config.delta, s2, tail);
  row[Col::thm3] = thm3_from_tail(n, m, config.delta, sel.eps, v, row[Col::norm_y_sq], s2, tail);
  row[Col::thm4] = thm4_from_tail(n, m, config.delta, sel.eps, v, s2, tail);

  // Pointwise bounds at probe rows: variational predictive vs exact posterior
  // marginal; deviations reported in units of the exact posterior std.
  const Index probes = std::min(config.probe_points, n);
  if (probes > 0) {
    const Eigen::MatrixXd xp = inst.X.topRows(probes);
    const auto [mu2, var2] = exact.marginals(inst.y, xp);
    const auto sol = approx.optimal_q(inst.y, config.noise);
    const auto pred = predict(sol, sel.inducing, config.kernel, xp);
    const auto pb = prop1_pointwise(0.0, 1.0, row[Col::kl_exact]);
    row[Col::prop1_eps] = pb.eps;
    double dev = 0.0, rlo = std::numeric_limits<double>::infinity(), rhi = 0.0;
    for (Index i = 0; i < probes; ++i) {
      const double sd = std::sqrt(std::max(var2(i), 1e-300));
      dev = std::max(dev, std::abs(pred.mean(i) - mu2(i)) / sd);
      const double ratio = pred.variance(i) / std::max(var2(i), 1e-300);
      rlo = std::min(rlo, ratio);
      rhi = std::max(rhi, ratio);
    }
    row[Col::prop1_obs_mean_dev] = dev;
    row[Col::prop1_obs_var_ratio_lo] = rlo;
    row[Col::prop1_obs_var_ratio_hi] = rhi;
    if (pb.applicable) {
      row[Col::prop1_mean_dev] = pb.mean_dev;
      row[Col::prop1_mean_dev_weak] = pb.mean_dev_weak;
      row[Col::prop1_var_lo] = pb.var_ratio.lo;
      row[Col::prop1_var_hi] = pb.var_ratio.hi;
      const double slack = 1e-9;
      if (dev > pb.mean_dev + slack) row.add_flag("info:prop1_statement_mean");
      if (dev > pb.mean_dev_weak + slack) row.add_flag("prop1_mean");
      if (rlo < pb.var_ratio.lo - slack || rhi > pb.var_ratio.hi + slack) row.add_flag("prop1_var");
    } else {
      row.add_flag("info:prop1_not_applicable");
    }
  }

  // Sandwich and bound-validity invariants.
  const double L = row[Col::log_marginal];
  const double tol = 1e-8 * std::max(1.0, std::abs(L));
  if (row[Col::elbo] > L + tol) row.add_flag("elbo_above_evidence");
  if (L > row[Col::upper_refined] + tol) row.add_flag("evidence_above_refined");
  if (row[Col::upper_refined] > row[Col::upper] + tol) row.add_flag("refined_above_upper");
  if (std::abs((L - row[Col::elbo]) - row[Col::kl_exact]) > tol) row.add_flag("kl_identity");
  if (row[Col::kl_exact] > l1.tight * (1.0 + 1e-8) + 1e-12) row.add_flag("lemma1");
  if (lam > t * (1.0 + 1e-8)) row.add_flag("lambda_above_t");
  if (config.y_draws > 1) {
    const double se = row[Col::kl_mc_se];
    if (row[Col::kl_mc_mean] < l2.lo - 3.0 * se || row[Col::kl_mc_mean] > l2.hi + 3.0 * se) {
      row.add_flag("lemma2_mc");
    }
  }
  if (row[Col::jitter_used] > 0.0) row.add_flag("info:jitter");
  if (sel.chain_capped) row.add_flag("info:chain_capped");
  if (sel.rank_capped) row.add_flag("info:m_capped_at_rank_from_" + std::to_string(sel.requested_m));
  if (row[Col::kl_exact] > row[Col::thm4]) row.add_flag("info:kl_above_thm4");
  const double bounds_s = seconds_since(start);

  if (timing) {
    timing->experiment = row.experiment;
    timing->seed = seed;
    timing->n = n;
    timing->m = m;
    timing->method = row.method;
    timing->solve_s = solve_s;
    timing->bounds_s = bounds_s;
  }
  return row;
}

namespace {

struct Task {
  std::uint64_t seed;
  Index n;
};

RunResult run_grid(const ExperimentConfig& config, const std::vector<Index>& n_grid,
                   const std::function<std::vector<Index>(Index)>& m_list) {
  const SpectrumTail spectrum = operator_spectrum(config);
  std::vector<Task> tasks;
  for (auto seed : config.seeds)
    for (auto n : n_grid) tasks.push_back({seed, n});
  for (auto n : n_grid) check_dense(config, n);

  std::vector<RunResult> partial(tasks.size());
  parallel_for(tasks.size(), config.threads, [&](std::size_t k) {
    const auto [seed, n] = tasks[k];
    RunResult& out = partial[k];
    const Instance inst = make_instance(config, n, seed);
    for (Index m : m_list(n)) {
      auto start = Clock::now();
      const Selection sel = select_inducing(config, inst, m, seed);
      const double select_s = seconds_since(start);
      if (sel.rank_capped) {
        out.warnings.push_back(config.name + ": K_ff has numerical rank " +
                               std::to_string(inducing_count(sel.inducing)) + " below M=" + std::to_string(m) +
                               " at N=" + std::to_string(n) + ", seed " + std::to_string(seed));
      }
      if (sel.chain_capped) {
        out.warnings.push_back(config.name + ": chain capped at " + std::to_string(sel.chain_steps) +
                               " steps for N=" + std::to_string(n) + ", M=" + std::to_string(m));
      }
      TimingRow timing;
      out.rows.push_back(evaluate(config, inst, sel, spectrum, seed, &timing));
      timing.selection_s = select_s;
      out.timings.push_back(timing);
      if (!sel.indices.empty()) {
        out.selections.push_back(
            selection_csv_line(config.name + "/N" + std::to_string(n) + "/M" + std::to_string(m),
                               to_string(config.method), seed, sel.indices));
      }
    }
  });
  RunResult result;
  for (auto& p : partial) {
    result.rows.insert(result.rows.end(), p.rows.begin(), p.rows.end());
    result.timings.insert(result.timings.end(), p.timings.begin(), p.timings.end());
    result.selections.insert(result.selections.end(), p.selections.begin(), p.selections.end());
    result.warnings.insert(result.warnings.end(), p.warnings.begin(), p.warnings.end());
  }
  sort_rows(result.rows);
  return result;
}

}  // namespace

RunResult run_fixed_m(const ExperimentConfig& config) {
  return run_grid(config, config.n_grid, [&](Index n) { return std::vector<Index>{resolve_m(config, n, config.m_values.front())}; });
}

RunResult run_m_sweep(const ExperimentConfig& config) {
  return run_grid(config, config.n_grid, [&](Index n) {
    std::vector<Index> ms;
    for (Index m : config.m_values) ms.push_back(std::min(m, n));
    return ms;
  });
}

RunResult run_log_schedule(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  if (c.m_rule == MRule::Fixed) c.m_rule = MRule::LogN;
  return run_grid(c, c.n_grid, [&](Index n) { return std::vector<Index>{resolve_m(c, n, 0)}; });
}

double mean_nearest_neighbor_distance(const Eigen::MatrixXd& points) {
  const Index k = points.rows();
  if (k < 2) return 0.0;
  double total = 0.0;
  for (Index i = 0; i < k; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < k; ++j)
      if (j != i) best = std::min(best, (points.row(i) - points.row(j)).norm());
    total += best;
  }
  return total / static_cast<double>(k);
}

RunResult run_dispersion(const ExperimentConfig& config) {
  RunResult result;
  const Index m = config.m_values.front();
  std::vector<std::vector<ResultRow>> partial(config.seeds.size());
  std::vector<std::vector<std::string>> lines(config.seeds.size());
  std::vector<std::string> labels;
  std::vector<std::vector<double>> strip;
  std::mutex mu;
  parallel_for(config.seeds.size(), config.threads, [&](std::size_t k) {
    const std::uint64_t seed = config.seeds[k];
    for (Index n : config.n_grid) {
      // Clustered 1-D sample: three Gaussian bumps of unequal mass.
      CounterRng rng(seed, stream_id(n, kStreamInputs));
      Eigen::MatrixXd x(n, 1);
      const double centers[] = {-2.0, 0.0, 2.5};
      const double widths[] = {0.3, 0.15, 0.4};
      for (Index i = 0; i < n; ++i) {
        const double u = rng.uniform();
        const int c = u < 0.5 ? 0 : (u < 0.8 ? 1 : 2);
        x(i, 0) = centers[c] + widths[c] * rng.normal();
      }
      const Index mm = std::min(m, n);
      auto add_row = [&](const std::string& method, double ell, const std::vector<Index>& idx) {
        ResultRow row;
        row.experiment = config.name;
        row.seed = seed;
        row.n = n;
        row.m = mm;
        row.method = method;
        row[Col::lengthscale] = ell;
        row[Col::mean_nn_distance] = mean_nearest_neighbor_distance(rows_of(x, idx));
        for (std::size_t a = 0; a < idx.size(); ++a)
          for (std::size_t b = a + 1; b < idx.size(); ++b)
            if (x(idx[a], 0) == x(idx[b], 0) && method != "points-uniform") row.add_flag("duplicate_selected");
        partial[k].push_back(row);
        lines[k].push_back(selection_csv_line(config.name + "/N" + std::to_string(n), method, seed, idx));
        if (k == 0 && n == config.n_grid.front()) {
          std::lock_guard<std::mutex> lock(mu);
          labels.push_back(method);
          std::vector<double> pts;
          for (Index i : idx) pts.push_back(x(i, 0));
          strip.push_back(pts);
        }
      };
      for (double ell : config.dispersion_lengthscales) {
        const KernelSpec kernel = KernelSpec::squared_exponential(config.kernel.variance, ell);
        const Eigen::MatrixXd kff = gram(kernel, x);
        GramSource source(kff);
        std::vector<Index> idx;
        if (mm >= n) {
          idx = all_indices(n);
        } else {
          const std::uint64_t steps = chain_length(config, n, mm).first;
          idx = kdpp_mcmc(source, mm, steps, seed, stream_id(n, kStreamSelection));
        }
        add_row("points-kdpp@ell=" + format_double(ell), ell, idx);
      }
      add_row("points-uniform", std::numeric_limits<double>::quiet_NaN(),
              uniform_subset(n, mm, seed ^ stream_id(n, kStreamSelection)));
    }
  });
  for (std::size_t k = 0; k < partial.size(); ++k) {
    result.rows.insert(result.rows.end(), partial[k].begin(), partial[k].end());
    result.selections.insert(result.selections.end(), lines[k].begin(), lines[k].end());
  }
  sort_rows(result.rows);
  result.strip_svg = render_strip_svg(config.name + ": selected inputs (first seed)", labels, strip);
  return result;
}

RunResult run_experiment(const ExperimentConfig& config) {
  switch (config.kind) {
    case ExperimentKind::FixedM: return run_fixed_m(config);
    case ExperimentKind::MSweep: return run_m_sweep(config);
    case ExperimentKind::LogSchedule: return run_log_schedule(config);
    case ExperimentKind::Dispersion: return run_dispersion(config);
    case ExperimentKind::OracleSuite: break;
  }
  throw ConfigError("run_experiment: oracle-suite blocks are run through run_oracle_suite");
}

}  // namespace sgpr::harness
