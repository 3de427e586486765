#pragma once

#include <string>
#include <vector>

#include "sgpr/harness/csv.hpp"

namespace sgpr::harness {

enum class XAxis { N, M };

struct PlotSpec {
  std::string title;
  XAxis x = XAxis::N;
  std::vector<Col> series;
  bool log_x = true;
  bool log_y = true;
};

/// Median of each series over rows sharing an x value, drawn as a line chart.
/// Nonpositive values are skipped on a log axis. Output is a deterministic
/// function of (rows, spec). Throws IoError.
std::string render_svg(const std::vector<ResultRow>& rows, const PlotSpec& spec);
void emit_svg(const std::vector<ResultRow>& rows, const PlotSpec& spec, const std::string& path);

/// Strip plot: one horizontal row of marks per labelled point set.
std::string render_strip_svg(const std::string& title, const std::vector<std::string>& labels,
                             const std::vector<std::vector<double>>& points);

double median(std::vector<double> values);

}  // namespace sgpr::harness
