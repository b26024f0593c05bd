#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "fdout/core.hpp"
#include "fdout/depths.hpp"

namespace fdout {

struct TvdResult {
  std::vector<double> tvd;  // in [0, 0.25]
  std::vector<double> mss;  // in [0, 1]
};

/// TVD_i = mean_t p_i(t) (1 - p_i(t)),  p_i(t) = #{j : Y_j(t) <= Y_i(t)} / n.
inline std::vector<double> total_variation_depth(const CurveSample& sample) {
  const std::size_t n = sample.n();
  const std::size_t p = sample.p();
  detail::require_curves(n, 2, "total_variation_depth");
  const PointwiseRanks r = pointwise_ranks(sample.values);
  const auto dn = static_cast<double>(n);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (std::size_t t = 0; t < p; ++t) {
      const double prob = static_cast<double>(r.le(i, t)) / dn;
      total += prob * (1.0 - prob);
    }
    out[i] = total / static_cast<double>(p);
  }
  return out;
}

/// Empirical pieces of var(R_t) = var[E(R_t | R_s)] + E[var(R_t | R_s)] for a
/// pair of indicator columns.
struct IndicatorVariance {
  double p_s = 0.0;
  double p_t = 0.0;
  double p_st = 0.0;
  double total = 0.0;    // p_t (1 - p_t)
  double between = 0.0;  // var of the conditional mean (shape component)
  double within = 0.0;   // mean of the conditional variance
};

inline IndicatorVariance indicator_variance(double p_s, double p_t, double p_st) {
  IndicatorVariance v{p_s, p_t, p_st};
  const double a = p_s > 0.0 ? p_st / p_s : 0.0;
  const double b = p_s < 1.0 ? (p_t - p_st) / (1.0 - p_s) : 0.0;
  v.total = p_t * (1.0 - p_t);
  v.between = p_s * (1.0 - p_s) * (a - b) * (a - b);
  v.within = p_s * a * (1.0 - a) + (1.0 - p_s) * b * (1.0 - b);
  return v;
}

/// Indicator decomposition at column `t` (lag `lag`) for the level curve `level`,
/// R^j_u = 1{Y_j(u) <= level(u)}.
inline IndicatorVariance indicator_variance_at(const CurveSample& sample, std::span<const double> level,
                                               std::size_t t, std::size_t lag = 1) {
  const std::size_t n = sample.n();
  const std::size_t s = t - lag;
  std::size_t cs = 0, ct = 0, cst = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const bool rs = sample.values(j, s) <= level[s];
    const bool rt = sample.values(j, t) <= level[t];
    cs += rs;
    ct += rt;
    cst += rs && rt;
  }
  const auto dn = static_cast<double>(n);
  return indicator_variance(static_cast<double>(cs) / dn, static_cast<double>(ct) / dn,
                            static_cast<double>(cst) / dn);
}

struct MssOptions {
  std::size_t lag = 1;  // in grid steps
};

/// Modified shape similarity. For each curve and each t past the first `lag`
/// points the pair (y(t - lag), y(t)) is shifted so that y(t) sits at the
/// pointwise median; the shape ratio between / total of the indicator
/// variance (1 when total is 0) is averaged with weights proportional to
/// |y(t) - y(t - lag)| (uniform when the curve is flat).
///
/// Per column, the curves below the median at t are kept sorted by their
/// value at s, so p_s and p_st are binary searches.
inline std::vector<double> modified_shape_similarity(const CurveSample& sample, MssOptions opts = {}) {
  const std::size_t n = sample.n();
  const std::size_t p = sample.p();
  detail::require_curves(n, 2, "modified_shape_similarity");
  if (opts.lag == 0) throw Error(ErrorCode::InvalidArgument, "lag must be positive");
  if (p < opts.lag + 1 || p < 2) throw Error(ErrorCode::TooFewPoints, "modified_shape_similarity needs p > lag");
  const Matrix& y = sample.values;
  const std::size_t lag = opts.lag;
  const std::size_t terms = p - lag;
  const auto dn = static_cast<double>(n);

  // shape(k, i): shape ratio of curve i at column t = k + lag.
  Matrix shape(terms, n);
  parallel_for(terms, [&](std::size_t k) {
    const std::size_t t = k + lag;
    const std::size_t s = k;
    const std::vector<double> col_t = y.col(t);
    const double med = median_of(col_t);
    std::vector<double> all_s = y.col(s);
    std::vector<double> joint_s;  // Y_j(s) for curves with Y_j(t) <= med
    std::size_t ct = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (col_t[j] <= med) {
        ++ct;
        joint_s.push_back(all_s[j]);
      }
    }
    std::sort(all_s.begin(), all_s.end());
    std::sort(joint_s.begin(), joint_s.end());
    const double p_t = static_cast<double>(ct) / dn;
    for (std::size_t i = 0; i < n; ++i) {
      const double level_s = y(i, s) - y(i, t) + med;
      const auto cs = std::upper_bound(all_s.begin(), all_s.end(), level_s) - all_s.begin();
      const auto cst = std::upper_bound(joint_s.begin(), joint_s.end(), level_s) - joint_s.begin();
      const IndicatorVariance v =
          indicator_variance(static_cast<double>(cs) / dn, p_t, static_cast<double>(cst) / dn);
      shape(k, i) = v.total == 0.0 ? 1.0 : v.between / v.total;
    }
  });

  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double norm = 0.0;
    for (std::size_t k = 0; k < terms; ++k) norm += std::abs(y(i, k + lag) - y(i, k));
    double acc = 0.0;
    for (std::size_t k = 0; k < terms; ++k) {
      const double w = norm > 0.0 ? std::abs(y(i, k + lag) - y(i, k)) / norm : 1.0 / static_cast<double>(terms);
      acc += shape(k, i) * w;
    }
    out[i] = acc;
  }
  return out;
}

inline TvdResult total_variation_depth_mss(const CurveSample& sample, MssOptions opts = {}) {
  return {total_variation_depth(sample), modified_shape_similarity(sample, opts)};
}

}  // namespace fdout
