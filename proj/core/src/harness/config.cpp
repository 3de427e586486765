#include "sgpr/harness/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "sgpr/errors.hpp"

namespace sgpr::harness {

namespace pt = boost::property_tree;

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::FixedM: return "fixed-m";
    case ExperimentKind::MSweep: return "m-sweep";
    case ExperimentKind::LogSchedule: return "log-schedule";
    case ExperimentKind::Dispersion: return "dispersion";
    case ExperimentKind::OracleSuite: return "oracle-suite";
  }
  return "unknown";
}

std::string to_string(MRule rule) {
  switch (rule) {
    case MRule::Fixed: return "fixed";
    case MRule::LogN: return "log";
    case MRule::Power: return "power";
    case MRule::ScheduleSe1d: return "schedule-se";
    case MRule::ScheduleMatern: return "schedule-matern";
  }
  return "unknown";
}

std::string to_string(Method method) {
  switch (method) {
    case Method::PointsKdpp: return "points-kdpp";
    case Method::PointsUniform: return "points-uniform";
    case Method::PointsGreedy: return "points-greedy";
    case Method::Eigvec: return "eigvec";
    case Method::Eigfunc: return "eigfunc";
  }
  return "unknown";
}

ExperimentKind parse_experiment_kind(const std::string& text) {
  for (auto k : {ExperimentKind::FixedM, ExperimentKind::MSweep, ExperimentKind::LogSchedule,
                 ExperimentKind::Dispersion, ExperimentKind::OracleSuite})
    if (to_string(k) == text) return k;
  throw ConfigError("unknown experiment type '" + text + "'");
}

MRule parse_m_rule(const std::string& text) {
  for (auto r : {MRule::Fixed, MRule::LogN, MRule::Power, MRule::ScheduleSe1d, MRule::ScheduleMatern})
    if (to_string(r) == text) return r;
  throw ConfigError("unknown m_rule '" + text + "'");
}

Method parse_method(const std::string& text) {
  for (auto m : {Method::PointsKdpp, Method::PointsUniform, Method::PointsGreedy, Method::Eigvec, Method::Eigfunc})
    if (to_string(m) == text) return m;
  throw ConfigError("unknown method '" + text + "'");
}

namespace {

const std::set<std::string> kKnownKeys = {
    "type", "kernel", "variance", "lengthscale", "order", "dim", "density", "density_mean", "density_std",
    "density_lower", "density_upper", "noise_variance", "n", "m", "m_rule", "m_c", "m_c0", "m_alpha", "gamma",
    "gamma_prime", "schedule_delta", "R", "eps_prime", "matern_mode", "method", "seeds", "seed_count",
    "y_draws", "eps", "chain_steps", "chain_cap", "delta", "dense_limit", "spectrum_q", "probe_points",
    "dispersion_lengthscales", "threads", "svg"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  std::istringstream is(trim(text));
  T value{};
  is >> value;
  if (is.fail() || !is.eof()) throw ConfigError("key '" + key + "': cannot parse '" + text + "'");
  return value;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(parse_number<T>(key, item));
  }
  if (out.empty()) throw ConfigError("key '" + key + "': empty list");
  return out;
}

ExperimentConfig parse_block(const std::string& name, const pt::ptree& block) {
  for (const auto& [key, value] : block) {
    if (!kKnownKeys.count(key)) throw ConfigError("section [" + name + "]: unknown key '" + key + "'");
    if (!value.empty()) throw ConfigError("section [" + name + "]: nested key '" + key + "'");
  }
  auto get = [&](const std::string& key) -> std::optional<std::string> {
    if (auto v = block.get_optional<std::string>(key)) return trim(*v);
    return std::nullopt;
  };
  auto num = [&](const std::string& key, double fallback) {
    auto v = get(key);
    return v ? parse_number<double>(key, *v) : fallback;
  };
  auto integer = [&](const std::string& key, long long fallback) {
    auto v = get(key);
    return v ? parse_number<long long>(key, *v) : fallback;
  };

  ExperimentConfig c;
  c.name = name;
  const auto type = get("type");
  if (!type) throw ConfigError("section [" + name + "]: missing 'type'");
  c.kind = parse_experiment_kind(*type);

  try {
    const Index dim = integer("dim", 1);
    const double variance = num("variance", 1.0);
    const double ell = num("lengthscale", 0.6);
    const std::string kernel = get("kernel").value_or("se");
    if (kernel == "se") {
      c.kernel = KernelSpec::squared_exponential(variance, ell, dim);
    } else if (kernel == "matern") {
      c.kernel = KernelSpec::matern(static_cast<int>(integer("order", 1)), variance, ell, dim);
    } else {
      throw ConfigError("section [" + name + "]: unknown kernel '" + kernel + "'");
    }
    const std::string density = get("density").value_or("gaussian");
    if (density == "gaussian") {
      c.density = DensitySpec::gaussian(num("density_mean", 0.0), num("density_std", 1.0), dim);
    } else if (density == "uniform") {
      c.density = DensitySpec::uniform(num("density_lower", 0.0), num("density_upper", 1.0), dim);
    } else {
      throw ConfigError("section [" + name + "]: unknown density '" + density + "'");
    }
    c.noise.variance = num("noise_variance", 1.0);
    c.noise.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("section [" + name + "]: " + e.what());
  }

  if (auto v = get("n")) c.n_grid = parse_list<Index>("n", *v);
  if (auto v = get("m")) c.m_values = parse_list<Index>("m", *v);
  if (auto v = get("m_rule")) c.m_rule = parse_m_rule(*v);
  if (auto v = get("m_c")) c.m_c = parse_number<double>("m_c", *v);
  if (auto v = get("m_c0")) c.m_c0 = parse_number<double>("m_c0", *v);
  c.m_alpha = num("m_alpha", c.m_alpha);
  c.schedule.gamma = num("gamma", c.schedule.gamma);
  c.schedule.gamma_prime = num("gamma_prime", c.schedule.gamma_prime);
  c.schedule.delta = num("schedule_delta", c.schedule.delta);
  c.schedule.R = num("R", c.schedule.R);
  c.schedule.eps_prime = num("eps_prime", c.schedule.eps_prime);
  if (auto v = get("matern_mode")) {
    if (*v == "aposteriori") c.matern_mode = MaternMode::Aposteriori;
    else if (*v == "average") c.matern_mode = MaternMode::Average;
    else if (*v == "eigenfunction") c.matern_mode = MaternMode::Eigenfunction;
    else throw ConfigError("section [" + name + "]: unknown matern_mode '" + *v + "'");
  }
  if (auto v = get("method")) c.method = parse_method(*v);
  if (auto v = get("seeds")) c.seeds = parse_list<std::uint64_t>("seeds", *v);
  if (auto v = get("seed_count")) {
    const auto count = parse_number<std::uint64_t>("seed_count", *v);
    const std::uint64_t first = c.seeds.empty() ? 1 : c.seeds.front();
    c.seeds.clear();
    for (std::uint64_t s = 0; s < count; ++s) c.seeds.push_back(first + s);
  }
  c.y_draws = integer("y_draws", c.y_draws);
  if (auto v = get("eps")) c.eps = parse_number<double>("eps", *v);
  if (auto v = get("chain_steps")) c.chain_steps = parse_number<std::uint64_t>("chain_steps", *v);
  c.chain_cap = static_cast<std::uint64_t>(integer("chain_cap", static_cast<long long>(c.chain_cap)));
  c.delta = num("delta", c.delta);
  c.dense_limit = integer("dense_limit", c.dense_limit);
  c.spectrum_q = integer("spectrum_q", c.spectrum_q);
  c.probe_points = integer("probe_points", c.probe_points);
  if (auto v = get("dispersion_lengthscales")) c.dispersion_lengthscales = parse_list<double>("dispersion_lengthscales", *v);
  c.threads = static_cast<unsigned>(integer("threads", 0));
  if (auto v = get("svg")) c.emit_svg = (*v == "true" || *v == "1" || *v == "yes");

  if (c.n_grid.empty() || c.m_values.empty() || c.seeds.empty()) {
    throw ConfigError("section [" + name + "]: grids and seed lists must be nonempty");
  }
  std::set<std::uint64_t> distinct(c.seeds.begin(), c.seeds.end());
  if (distinct.size() != c.seeds.size()) throw ConfigError("section [" + name + "]: seeds must be distinct");
  if (!(c.delta > 0.0 && c.delta < 1.0)) throw ConfigError("section [" + name + "]: delta must lie in (0, 1)");
  return c;
}

}  // namespace

std::vector<ExperimentConfig> parse_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream is(text);
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  std::vector<ExperimentConfig> out;
  for (const auto& [section, block] : tree) {
    if (block.empty()) throw ConfigError("key '" + section + "' appears outside any section");
    out.push_back(parse_block(section, block));
  }
  return out;
}

std::vector<ExperimentConfig> load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

ExperimentConfig default_experiment(ExperimentKind kind) {
  ExperimentConfig c;
  c.kind = kind;
  c.name = to_string(kind);
  c.seeds.clear();
  switch (kind) {
    case ExperimentKind::FixedM:
      c.density = DensitySpec::uniform(0.0, 5.0);
      c.n_grid = {100, 200, 500, 1000, 2000};
      c.m_values = {15};
      for (std::uint64_t s = 1; s <= 10; ++s) c.seeds.push_back(s);
      break;
    case ExperimentKind::MSweep:
      c.n_grid = {1000};
      c.m_values = {2, 4, 6, 8, 10, 12, 14, 16, 18, 20, 25, 30};
      for (std::uint64_t s = 1; s <= 10; ++s) c.seeds.push_back(s);
      break;
    case ExperimentKind::LogSchedule:
      c.n_grid = {250, 500, 1000, 2000, 4000};
      c.m_rule = MRule::LogN;
      for (std::uint64_t s = 1; s <= 20; ++s) c.seeds.push_back(s);
      break;
    case ExperimentKind::Dispersion:
      c.n_grid = {200};
      c.m_values = {12};
      for (std::uint64_t s = 1; s <= 100; ++s) c.seeds.push_back(s);
      break;
    case ExperimentKind::OracleSuite:
      c.seeds = {1};
      break;
  }
  return c;
}

}  // namespace sgpr::harness
