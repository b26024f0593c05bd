#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "fdout/core.hpp"
#include "fdout/io.hpp"

namespace fdout::plot {

enum class PlotKind { Curves, Msplot };

inline PlotKind parse_plot_kind(const std::string& s) {
  if (s == "curves") return PlotKind::Curves;
  if (s == "msplot") return PlotKind::Msplot;
  throw Error(ErrorCode::InvalidArgument, "unknown plot kind '" + s + "'");
}

inline std::string to_string(PlotKind k) { return k == PlotKind::Curves ? "curves" : "msplot"; }

namespace detail {

constexpr double kWidth = 720.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 70.0, kRight = 20.0, kTop = 40.0, kBottom = 60.0;
constexpr const char* kMuted = "#9aa5b1";
constexpr const char* kHighlight = "#d62728";

inline std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string tick_label(double v) {
  if (std::abs(v) < 1e-12) v = 0.0;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Frame {
  double x0, x1, y0, y1;

  double sx(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
  double sy(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

inline void pad_range(double& lo, double& hi) {
  if (!(hi > lo)) {
    lo -= 1.0;
    hi += 1.0;
    return;
  }
  const double pad = 0.04 * (hi - lo);
  lo -= pad;
  hi += pad;
}

inline std::string header(const std::string& title) {
  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + fixed(kWidth) + "\" height=\"" +
       fixed(kHeight) + "\" viewBox=\"0 0 " + fixed(kWidth) + " " + fixed(kHeight) + "\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"" + fixed(kWidth) + "\" height=\"" + fixed(kHeight) + "\" fill=\"white\"/>\n";
  s += "<text x=\"" + fixed(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"15\">" + escape(title) + "</text>\n";
  return s;
}

inline std::string axes(const Frame& f, const std::string& xlabel, const std::string& ylabel) {
  std::string s;
  const double bx = kHeight - kBottom;
  s += "<g stroke=\"black\" stroke-width=\"1\">\n";
  s += "<line x1=\"" + fixed(kLeft) + "\" y1=\"" + fixed(bx) + "\" x2=\"" + fixed(kWidth - kRight) + "\" y2=\"" +
       fixed(bx) + "\"/>\n";
  s += "<line x1=\"" + fixed(kLeft) + "\" y1=\"" + fixed(kTop) + "\" x2=\"" + fixed(kLeft) + "\" y2=\"" + fixed(bx) +
       "\"/>\n";
  constexpr int kTicks = 5;
  for (int k = 0; k <= kTicks; ++k) {
    const double xv = f.x0 + (f.x1 - f.x0) * k / kTicks;
    const double yv = f.y0 + (f.y1 - f.y0) * k / kTicks;
    s += "<line x1=\"" + fixed(f.sx(xv)) + "\" y1=\"" + fixed(bx) + "\" x2=\"" + fixed(f.sx(xv)) + "\" y2=\"" +
         fixed(bx + 5) + "\"/>\n";
    s += "<line x1=\"" + fixed(kLeft - 5) + "\" y1=\"" + fixed(f.sy(yv)) + "\" x2=\"" + fixed(kLeft) + "\" y2=\"" +
         fixed(f.sy(yv)) + "\"/>\n";
  }
  s += "</g>\n<g font-family=\"sans-serif\" font-size=\"11\" fill=\"black\">\n";
  for (int k = 0; k <= kTicks; ++k) {
    const double xv = f.x0 + (f.x1 - f.x0) * k / kTicks;
    const double yv = f.y0 + (f.y1 - f.y0) * k / kTicks;
    s += "<text x=\"" + fixed(f.sx(xv)) + "\" y=\"" + fixed(bx + 18) + "\" text-anchor=\"middle\">" +
         tick_label(xv) + "</text>\n";
    s += "<text x=\"" + fixed(kLeft - 8) + "\" y=\"" + fixed(f.sy(yv) + 4) + "\" text-anchor=\"end\">" +
         tick_label(yv) + "</text>\n";
  }
  s += "</g>\n";
  s += "<text x=\"" + fixed((kLeft + kWidth - kRight) / 2) + "\" y=\"" + fixed(kHeight - 18) +
       "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" + escape(xlabel) + "</text>\n";
  const double cy = (kTop + kHeight - kBottom) / 2;
  s += "<text x=\"18\" y=\"" + fixed(cy) + "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
       "transform=\"rotate(-90 18 " + fixed(cy) + ")\">" + escape(ylabel) + "</text>\n";
  return s;
}

inline std::vector<bool> flag_mask(std::size_t n, const IndexSet& flagged) {
  std::vector<bool> mask(n, false);
  for (auto i : flagged)
    if (i < n) mask[i] = true;
  return mask;
}

}  // namespace detail

/// All curves as polylines: inliers muted, flagged curves highlighted and
/// drawn last. For multivariate samples the first coordinate is drawn.
inline std::string curves_svg(const MultiCurveSample& sample, const IndexSet& flagged, const std::string& title) {
  using namespace detail;
  const std::size_t n = sample.n();
  const std::size_t p = sample.p();
  const Matrix& y = sample.dims.front();
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : y.data()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  double g0 = sample.grid.points().front(), g1 = sample.grid.points().back();
  pad_range(lo, hi);
  if (!(g1 > g0)) pad_range(g0, g1);
  const Frame f{g0, g1, lo, hi};
  const std::vector<bool> mask = flag_mask(n, flagged);

  std::string s = header(title);
  s += axes(f, "t", sample.d() > 1 ? "Y(t), coordinate 1" : "Y(t)");
  for (int pass = 0; pass < 2; ++pass) {
    const bool outlier_pass = pass == 1;
    s += std::string("<g fill=\"none\" stroke=\"") + (outlier_pass ? kHighlight : kMuted) + "\" stroke-width=\"" +
         (outlier_pass ? "1.60" : "0.80") + "\">\n";
    for (std::size_t i = 0; i < n; ++i) {
      if (mask[i] != outlier_pass) continue;
      s += "<polyline points=\"";
      for (std::size_t t = 0; t < p; ++t) {
        if (t) s += ' ';
        s += fixed(f.sx(sample.grid[t])) + "," + fixed(f.sy(y(i, t)));
      }
      s += "\"/>\n";
    }
    s += "</g>\n";
  }
  s += "</svg>\n";
  return s;
}

/// VO against MO (against |MO| when d >= 2) from an msplot report.
inline std::string msplot_svg(const io::DetectionReport& report) {
  using namespace detail;
  const std::vector<double>* vo = report.find_diagnostic("vo");
  std::vector<const std::vector<double>*> mo;
  for (std::size_t k = 0; k < report.d; ++k) mo.push_back(report.find_diagnostic("mo_" + std::to_string(k + 1)));
  const bool ok = vo && vo->size() == report.n && report.d >= 1 &&
                  std::all_of(mo.begin(), mo.end(), [&](auto* m) { return m && m->size() == report.n; });
  if (!ok) throw Error(ErrorCode::InconsistentReport, "msplot plot needs mo_k and vo diagnostics of length n");

  const std::size_t n = report.n;
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (report.d == 1) {
      xs[i] = (*mo[0])[i];
    } else {
      double s2 = 0.0;
      for (auto* m : mo) s2 += (*m)[i] * (*m)[i];
      xs[i] = std::sqrt(s2);
    }
  }
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite((*vo)[i])) continue;
    x0 = std::min(x0, xs[i]);
    x1 = std::max(x1, xs[i]);
    y0 = std::min(y0, (*vo)[i]);
    y1 = std::max(y1, (*vo)[i]);
  }
  if (!std::isfinite(x0)) x0 = x1 = y0 = y1 = 0.0;
  pad_range(x0, x1);
  pad_range(y0, y1);
  const Frame f{x0, x1, y0, y1};
  const IndexSet* flagged = report.find_outliers("outliers");
  const std::vector<bool> mask = flag_mask(n, flagged ? *flagged : IndexSet{});

  std::string s = header("MS-Plot");
  s += axes(f, report.d == 1 ? "MO" : "‖MO‖", "VO");
  for (int pass = 0; pass < 2; ++pass) {
    const bool outlier_pass = pass == 1;
    s += std::string("<g fill=\"") + (outlier_pass ? kHighlight : kMuted) + "\" stroke=\"none\">\n";
    for (std::size_t i = 0; i < n; ++i) {
      if (mask[i] != outlier_pass) continue;
      if (!std::isfinite(xs[i]) || !std::isfinite((*vo)[i])) continue;
      s += "<circle cx=\"" + fixed(f.sx(xs[i])) + "\" cy=\"" + fixed(f.sy((*vo)[i])) + "\" r=\"" +
           (outlier_pass ? "4.00" : "3.00") + "\"/>\n";
    }
    s += "</g>\n";
  }
  s += "</svg>\n";
  return s;
}

/// Renders `kind` for a report and the sample it was computed from.
inline std::string render(const io::DetectionReport& report, const MultiCurveSample& sample, PlotKind kind) {
  if (report.n != sample.n() || report.p != sample.p() || report.d != sample.d()) {
    throw Error(ErrorCode::InconsistentReport, "report shape does not match the data");
  }
  if (kind == PlotKind::Msplot) return msplot_svg(report);
  const IndexSet* flagged = report.find_outliers("outliers");
  return curves_svg(sample, flagged ? *flagged : IndexSet{}, report.method.empty() ? "curves" : report.method);
}

}  // namespace fdout::plot
