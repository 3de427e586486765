#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sgpr/errors.hpp"
#include "sgpr/harness/config.hpp"
#include "sgpr/harness/csv.hpp"
#include "sgpr/harness/experiments.hpp"
#include "sgpr/harness/oracle_suite.hpp"
#include "sgpr/harness/svg.hpp"

namespace fs = std::filesystem;
using namespace sgpr::harness;

namespace {

constexpr int kOk = 0;
constexpr int kViolation = 1;
constexpr int kUsage = 2;

struct Options {
  std::string config;
  std::uint64_t seed_offset = 0;
  std::string out_dir = "results";
  long long dense_limit = -1;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw sgpr::IoError("cannot write " + path.string());
  out << text;
}

std::vector<PlotSpec> plots_for(const ExperimentConfig& c) {
  switch (c.kind) {
    case ExperimentKind::FixedM:
      return {{c.name + ": KL against N at fixed M", XAxis::N, {Col::kl_exact, Col::lemma2_lo, Col::lemma2_hi}}};
    case ExperimentKind::MSweep:
      return {{c.name + ": KL and bounds against M", XAxis::M,
               {Col::kl_exact, Col::upper_gap, Col::refined_gap, Col::thm3, Col::thm4}, false, true}};
    case ExperimentKind::LogSchedule:
      return {{c.name + ": KL against N with M = C log N", XAxis::N, {Col::kl_exact, Col::refined_gap, Col::thm4}}};
    default:
      return {};
  }
}

int run_experiments(ExperimentKind kind, const Options& opt) {
  std::vector<ExperimentConfig> blocks;
  if (opt.config.empty()) {
    blocks.push_back(default_experiment(kind));
  } else {
    for (auto& b : load_config(opt.config))
      if (b.kind == kind) blocks.push_back(std::move(b));
    if (blocks.empty()) {
      std::cerr << "no [" << to_string(kind) << "] blocks in " << opt.config << "\n";
      return kUsage;
    }
  }
  fs::create_directories(opt.out_dir);
  bool violation = false;
  for (auto& c : blocks) {
    for (auto& s : c.seeds) s += opt.seed_offset;
    if (opt.dense_limit >= 0) c.dense_limit = opt.dense_limit;
    std::cerr << "running " << c.name << " (" << c.seeds.size() << " seeds)\n";
    const RunResult r = run_experiment(c);
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
    const fs::path base = fs::path(opt.out_dir) / c.name;
    emit_csv(r.rows, base.string() + ".csv");
    if (!r.timings.empty()) emit_timing_csv(r.timings, base.string() + ".timing.csv");
    if (!r.selections.empty()) {
      std::string text = "run_id,method,seed,indices\n";
      for (const auto& line : r.selections) text += line + "\n";
      write_text(base.string() + ".selections.csv", text);
    }
    if (c.emit_svg) {
      for (const auto& spec : plots_for(c)) emit_svg(r.rows, spec, base.string() + ".svg");
      if (!r.strip_svg.empty()) write_text(base.string() + ".svg", r.strip_svg);
    }
    for (const auto& row : r.rows) {
      if (row_has_violation(row)) {
        std::cerr << "violation: " << row.experiment << " seed=" << row.seed << " N=" << row.n << " M=" << row.m
                  << " flags=" << row.flags << "\n";
        violation = true;
      }
    }
  }
  return violation ? kViolation : kOk;
}

int run_oracles(const Options& opt) {
  bool ok = true;
  for (const auto& r : run_oracle_suite(1 + opt.seed_offset)) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
    ok = ok && r.passed;
  }
  return ok ? kOk : kViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse variational GP bound experiments"};
  app.require_subcommand(1);
  Options opt;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"fixed-m", "KL against N with M held fixed"},
      {"m-sweep", "KL and bounds against M on a fixed dataset"},
      {"log-schedule", "KL against N with M growing logarithmically"},
      {"dispersion", "inducing point dispersion of k-DPP and uniform selection"},
      {"oracle-suite", "library checks against dense and enumeration oracles"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config, "INI file; blocks whose type matches the subcommand are run")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed-offset", opt.seed_offset, "added to every seed");
    sub->add_option("--out-dir", opt.out_dir, "output directory")->capture_default_str();
    sub->add_option("--dense-limit", opt.dense_limit, "largest N for dense O(N^3) evaluation");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  const std::string name = app.get_subcommands().front()->get_name();
  try {
    if (name == "oracle-suite") return run_oracles(opt);
    return run_experiments(parse_experiment_kind(name), opt);
  } catch (const sgpr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kViolation;
  }
}
