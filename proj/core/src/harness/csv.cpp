#include "sgpr/harness/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <tuple>

#include "sgpr/errors.hpp"

namespace sgpr::harness {

namespace {

constexpr std::array<std::string_view, kNumCols> kNames = {
    "t",
    "lambda_max",
    "elbo",
    "log_marginal",
    "upper",
    "upper_refined",
    "upper_gap",
    "refined_gap",
    "kl_exact",
    "kl_mc_mean",
    "kl_mc_se",
    "norm_y_sq",
    "jitter_used",
    "lemma1",
    "lemma1_loose",
    "lemma2_lo",
    "lemma2_hi",
    "thm1",
    "thm2",
    "thm3",
    "thm4",
    "operator_tail",
    "eps",
    "chain_steps",
    "chain_acceptance",
    "prop1_eps",
    "prop1_mean_dev",
    "prop1_mean_dev_weak",
    "prop1_var_lo",
    "prop1_var_hi",
    "prop1_obs_mean_dev",
    "prop1_obs_var_ratio_lo",
    "prop1_obs_var_ratio_hi",
    "mean_nn_distance",
    "lengthscale",
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw IoError("csv: bad number '" + s + "'");
  return v;
}

template <class T>
T parse_int(const std::string& s) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw IoError("csv: bad integer '" + s + "'");
  return v;
}

}  // namespace

std::string_view column_name(Col c) { return kNames[static_cast<std::size_t>(c)]; }

ResultRow::ResultRow() { values.fill(std::numeric_limits<double>::quiet_NaN()); }

void ResultRow::add_flag(const std::string& flag) {
  if (!flags.empty()) flags += ';';
  flags += flag;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

std::string csv_header() {
  std::string h = "experiment,seed,n,m,method";
  for (auto name : kNames) {
    h += ',';
    h += name;
  }
  h += ",flags";
  return h;
}

std::string format_row(const ResultRow& row) {
  std::string s = row.experiment + ',' + std::to_string(row.seed) + ',' + std::to_string(row.n) + ',' +
                  std::to_string(row.m) + ',' + row.method;
  for (double v : row.values) {
    s += ',';
    s += format_double(v);
  }
  s += ',';
  s += row.flags;
  return s;
}

void sort_rows(std::vector<ResultRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.experiment, a.seed, a.n, a.m, a.method) < std::tie(b.experiment, b.seed, b.n, b.m, b.method);
  });
}

void emit_csv(std::vector<ResultRow> rows, const std::string& path) {
  sort_rows(rows);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << csv_header() << '\n';
  for (const auto& r : rows) out << format_row(r) << '\n';
  if (!out) throw IoError("write failed for " + path);
}

void emit_timing_csv(std::vector<TimingRow> rows, const std::string& path) {
  std::stable_sort(rows.begin(), rows.end(), [](const TimingRow& a, const TimingRow& b) {
    return std::tie(a.experiment, a.seed, a.n, a.m, a.method) < std::tie(b.experiment, b.seed, b.n, b.m, b.method);
  });
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "experiment,seed,n,m,method,selection_s,solve_s,bounds_s\n";
  for (const auto& r : rows) {
    out << r.experiment << ',' << r.seed << ',' << r.n << ',' << r.m << ',' << r.method << ','
        << format_double(r.selection_s) << ',' << format_double(r.solve_s) << ',' << format_double(r.bounds_s)
        << '\n';
  }
  if (!out) throw IoError("write failed for " + path);
}

std::vector<ResultRow> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != csv_header()) throw IoError("csv: header does not match");
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 6 + kNumCols) throw IoError("csv: wrong field count in '" + line + "'");
    ResultRow r;
    r.experiment = f[0];
    r.seed = parse_int<std::uint64_t>(f[1]);
    r.n = parse_int<Index>(f[2]);
    r.m = parse_int<Index>(f[3]);
    r.method = f[4];
    for (std::size_t k = 0; k < kNumCols; ++k) r.values[k] = parse_double(f[5 + k]);
    r.flags = f[5 + kNumCols];
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ResultRow> read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

}  // namespace sgpr::harness
