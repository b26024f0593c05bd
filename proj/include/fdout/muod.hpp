#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "fdout/core.hpp"

namespace fdout {

struct MuodIndices {
  std::vector<double> shape;      // |mean_j rho(i, j) - 1|
  std::vector<double> magnitude;  // |mean_j alpha_j|
  std::vector<double> amplitude;  // |mean_j beta_j - 1|
};

enum class MuodCut { Tangent, Boxplot };

inline std::string to_string(MuodCut c) { return c == MuodCut::Tangent ? "tangent" : "boxplot"; }

inline MuodCut parse_muod_cut(const std::string& s) {
  if (s == "tangent") return MuodCut::Tangent;
  if (s == "boxplot") return MuodCut::Boxplot;
  throw Error(ErrorCode::InvalidArgument, "unknown cut method '" + s + "'");
}

struct MuodOutliers {
  IndexSet shape, magnitude, amplitude;
  MuodCut cut_method = MuodCut::Boxplot;
};

/// Pairwise correlation / slope / intercept averages over j = 1..n, self pair
/// included, (p - 1)-denominator covariances. Pairs where either curve is flat
/// are skipped. A flat curve i has no usable pair; it is given rho = beta = 0
/// and alpha = its grid mean, so I_S = I_A = 1 and I_M = |mean|.
inline MuodIndices muod_indices(const CurveSample& sample) {
  const std::size_t n = sample.n();
  const std::size_t p = sample.p();
  if (n < 3) throw Error(ErrorCode::TooFewCurves, "muod needs at least 3 curves");
  if (p < 3) throw Error(ErrorCode::TooFewPoints, "muod needs at least 3 grid points");

  std::vector<double> mean(n), var(n);
  Matrix centered(n, p);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = sample.values.row(i);
    mean[i] = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(p);
    double ss = 0.0;
    for (std::size_t t = 0; t < p; ++t) {
      centered(i, t) = row[t] - mean[i];
      ss += centered(i, t) * centered(i, t);
    }
    var[i] = ss / static_cast<double>(p - 1);
  }
  if (std::all_of(var.begin(), var.end(), [](double v) { return v == 0.0; })) {
    throw Error(ErrorCode::AllDegenerate, "every curve is constant");
  }

  MuodIndices out{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
  parallel_for(n, [&](std::size_t i) {
    if (var[i] == 0.0) {
      out.shape[i] = 1.0;
      out.amplitude[i] = 1.0;
      out.magnitude[i] = std::abs(mean[i]);
      return;
    }
    double rho_sum = 0.0, beta_sum = 0.0, alpha_sum = 0.0;
    std::size_t used = 0;
    const auto ci = centered.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (var[j] == 0.0) continue;
      const auto cj = centered.row(j);
      double dot = 0.0;
      for (std::size_t t = 0; t < p; ++t) dot += ci[t] * cj[t];
      const double cov = dot / static_cast<double>(p - 1);
      const double beta = cov / var[j];
      rho_sum += cov / std::sqrt(var[i] * var[j]);
      beta_sum += beta;
      alpha_sum += mean[i] - beta * mean[j];
      ++used;
    }
    const auto m = static_cast<double>(used);
    out.shape[i] = std::abs(rho_sum / m - 1.0);
    out.amplitude[i] = std::abs(beta_sum / m - 1.0);
    out.magnitude[i] = std::abs(alpha_sum / m);
  });
  return out;
}

/// Flags x_i > Q3 + 1.5 IQR (type-7 quartiles).
inline IndexSet muod_cutoff_boxplot(const std::vector<double>& x) {
  if (x.size() < 5) throw Error(ErrorCode::TooFewCurves, "boxplot cutoff needs at least 5 values");
  std::vector<double> s = x;
  std::sort(s.begin(), s.end());
  const double q1 = quantile_sorted(s, 0.25);
  const double q3 = quantile_sorted(s, 0.75);
  const double fence = q3 + 1.5 * (q3 - q1);
  IndexSet out;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] > fence) out.push_back(i);
  return out;
}

/// Tangent cutoff on the sorted index curve g(1..n). The terminal slope is a
/// least-squares fit over the last max(3, ceil(0.02 n)) points; while that
/// slope is exactly zero and points remain, the window grows by one so that
/// a handful of tied extreme values still registers the jump before them.
inline IndexSet muod_cutoff_tangent(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 10) throw Error(ErrorCode::TooFewCurves, "tangent cutoff needs at least 10 values");
  std::vector<double> g = x;
  std::sort(g.begin(), g.end());

  auto slope_over = [&](std::size_t w) {
    // k runs over n - w + 1 .. n
    double kbar = 0.0, gbar = 0.0;
    for (std::size_t k = n - w; k < n; ++k) {
      kbar += static_cast<double>(k + 1);
      gbar += g[k];
    }
    kbar /= static_cast<double>(w);
    gbar /= static_cast<double>(w);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = n - w; k < n; ++k) {
      const double dk = static_cast<double>(k + 1) - kbar;
      sxy += dk * (g[k] - gbar);
      sxx += dk * dk;
    }
    return sxy / sxx;
  };

  std::size_t w = std::max<std::size_t>(3, static_cast<std::size_t>(std::ceil(0.02 * static_cast<double>(n))));
  w = std::min(w, n);
  double slope = slope_over(w);
  while (slope == 0.0 && w < n) slope = slope_over(++w);
  if (!(slope > 0.0)) return {};

  const double k_star = static_cast<double>(n) - g[n - 1] / slope;
  const double k_up = std::ceil(k_star);
  double cutoff;
  if (k_up <= 1.0) {
    cutoff = g.front();
  } else if (k_up >= static_cast<double>(n)) {
    cutoff = g.back();
  } else {
    cutoff = g[static_cast<std::size_t>(k_up) - 1];
  }
  IndexSet out;
  for (std::size_t i = 0; i < n; ++i)
    if (x[i] > cutoff) out.push_back(i);
  return out;
}

inline IndexSet muod_cutoff(const std::vector<double>& x, MuodCut cut) {
  return cut == MuodCut::Tangent ? muod_cutoff_tangent(x) : muod_cutoff_boxplot(x);
}

struct MuodResult {
  MuodOutliers outliers;
  MuodIndices indices;
};

inline constexpr MuodCut kDefaultMuodCut = MuodCut::Boxplot;

inline MuodResult muod(const CurveSample& sample, MuodCut cut = kDefaultMuodCut) {
  MuodResult r;
  r.indices = muod_indices(sample);
  r.outliers.cut_method = cut;
  r.outliers.shape = muod_cutoff(r.indices.shape, cut);
  r.outliers.magnitude = muod_cutoff(r.indices.magnitude, cut);
  r.outliers.amplitude = muod_cutoff(r.indices.amplitude, cut);
  return r;
}

}  // namespace fdout
