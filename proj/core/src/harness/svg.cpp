#include "sgpr/harness/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>

#include "sgpr/errors.hpp"

namespace sgpr::harness {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 170.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", x);
  return buf;
}

std::string tick_label(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", x);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

double median(std::vector<double> values) {
  values.erase(std::remove_if(values.begin(), values.end(), [](double v) { return std::isnan(v); }), values.end());
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t k = values.size();
  return k % 2 ? values[k / 2] : 0.5 * (values[k / 2 - 1] + values[k / 2]);
}

std::string render_svg(const std::vector<ResultRow>& rows, const PlotSpec& spec) {
  // series -> x -> values
  std::vector<std::map<double, std::vector<double>>> groups(spec.series.size());
  for (const auto& r : rows) {
    const double x = static_cast<double>(spec.x == XAxis::N ? r.n : r.m);
    for (std::size_t s = 0; s < spec.series.size(); ++s) groups[s][x].push_back(r[spec.series[s]]);
  }
  std::vector<std::vector<std::pair<double, double>>> lines(spec.series.size());
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  auto tx = [&](double v) { return spec.log_x ? std::log10(v) : v; };
  auto ty = [&](double v) { return spec.log_y ? std::log10(v) : v; };
  for (std::size_t s = 0; s < groups.size(); ++s) {
    for (const auto& [x, vals] : groups[s]) {
      const double y = median(vals);
      if (std::isnan(y) || (spec.log_y && !(y > 0.0)) || (spec.log_x && !(x > 0.0))) continue;
      lines[s].emplace_back(tx(x), ty(y));
      xmin = std::min(xmin, tx(x));
      xmax = std::max(xmax, tx(x));
      ymin = std::min(ymin, ty(y));
      ymax = std::max(ymax, ty(y));
    }
  }
  if (!std::isfinite(xmin)) {
    xmin = 0.0;
    xmax = 1.0;
    ymin = 0.0;
    ymax = 1.0;
  }
  if (xmax - xmin < 1e-12) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (ymax - ymin < 1e-12) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double v) { return kLeft + (v - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double v) { return kTop + (1.0 - (v - ymin) / (ymax - ymin)) * ph; };

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
         "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + num(kLeft) + "\" y=\"22\" font-size=\"14\">" + escape(spec.title) + "</text>\n";
  svg += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = xmin + (xmax - xmin) * k / 4.0;
    const double fy = ymin + (ymax - ymin) * k / 4.0;
    const double lx = spec.log_x ? std::pow(10.0, fx) : fx;
    const double ly = spec.log_y ? std::pow(10.0, fy) : fy;
    svg += "<text x=\"" + num(px(fx)) + "\" y=\"" + num(kTop + ph + 16) + "\" text-anchor=\"middle\">" +
           tick_label(lx) + "</text>\n";
    svg += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(py(fy) + 4) + "\" text-anchor=\"end\">" + tick_label(ly) +
           "</text>\n";
    svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(py(fy)) + "\" x2=\"" + num(kLeft + pw) + "\" y2=\"" +
           num(py(fy)) + "\" stroke=\"#dddddd\"/>\n";
  }
  svg += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"" + num(kHeight - 12) + "\" text-anchor=\"middle\">" +
         std::string(spec.x == XAxis::N ? "N" : "M") + (spec.log_x ? " (log)" : "") + "</text>\n";
  for (std::size_t s = 0; s < lines.size(); ++s) {
    const char* colour = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
    if (!lines[s].empty()) {
      std::string pts;
      for (const auto& [x, y] : lines[s]) pts += num(px(x)) + "," + num(py(y)) + " ";
      pts.pop_back();
      svg += "<polyline fill=\"none\" stroke=\"" + std::string(colour) + "\" stroke-width=\"2\" points=\"" + pts +
             "\"/>\n";
      for (const auto& [x, y] : lines[s]) {
        svg += "<circle cx=\"" + num(px(x)) + "\" cy=\"" + num(py(y)) + "\" r=\"3\" fill=\"" + colour + "\"/>\n";
      }
    }
    const double ly = kTop + 14.0 + 18.0 * static_cast<double>(s);
    svg += "<line x1=\"" + num(kLeft + pw + 12) + "\" y1=\"" + num(ly - 4) + "\" x2=\"" + num(kLeft + pw + 32) +
           "\" y2=\"" + num(ly - 4) + "\" stroke=\"" + colour + "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + num(kLeft + pw + 38) + "\" y=\"" + num(ly) + "\">" +
           escape(std::string(column_name(spec.series[s]))) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

void emit_svg(const std::vector<ResultRow>& rows, const PlotSpec& spec, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << render_svg(rows, spec);
  if (!out) throw IoError("write failed for " + path);
}

std::string render_strip_svg(const std::string& title, const std::vector<std::string>& labels,
                             const std::vector<std::vector<double>>& points) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& set : points)
    for (double v : set) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (!std::isfinite(lo)) {
    lo = 0.0;
    hi = 1.0;
  }
  if (hi - lo < 1e-12) hi = lo + 1.0;
  const double pw = kWidth - kLeft - 40.0;
  const double row_h = 40.0;
  const double height = kTop + row_h * static_cast<double>(points.size()) + 30.0;
  auto px = [&](double v) { return kLeft + 20.0 + (v - lo) / (hi - lo) * (pw - 40.0); };
  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(height) +
         "\" viewBox=\"0 0 " + num(kWidth) + " " + num(height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + num(kLeft) + "\" y=\"22\" font-size=\"14\">" + escape(title) + "</text>\n";
  for (std::size_t r = 0; r < points.size(); ++r) {
    const double y = kTop + row_h * (static_cast<double>(r) + 0.5);
    const char* colour = kPalette[r % (sizeof(kPalette) / sizeof(kPalette[0]))];
    svg += "<text x=\"" + num(kLeft + 10) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"end\">" +
           escape(r < labels.size() ? labels[r] : "") + "</text>\n";
    svg += "<line x1=\"" + num(kLeft + 20) + "\" y1=\"" + num(y) + "\" x2=\"" + num(kLeft + pw) + "\" y2=\"" + num(y) +
           "\" stroke=\"#cccccc\"/>\n";
    for (double v : points[r]) {
      svg += "<line x1=\"" + num(px(v)) + "\" y1=\"" + num(y - 8) + "\" x2=\"" + num(px(v)) + "\" y2=\"" +
             num(y + 8) + "\" stroke=\"" + colour + "\" stroke-width=\"2\"/>\n";
    }
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace sgpr::harness
