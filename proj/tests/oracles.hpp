#pragma once

// Brute-force reference implementations used by the unit and acceptance
// tests. They follow the textbook definitions directly and share no code
// with the library kernels beyond the data containers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "fdout/core.hpp"

namespace oracle {

using fdout::CurveSample;
using fdout::Matrix;

inline double at(const CurveSample& s, std::size_t i, std::size_t t) { return s.values(i, t); }

inline std::vector<double> band_depth(const CurveSample& s) {
  const std::size_t n = s.n(), p = s.p();
  std::vector<double> out(n, 0.0);
  double pairs = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = j + 1; k < n; ++k) {
      pairs += 1.0;
      for (std::size_t i = 0; i < n; ++i) {
        bool inside = true;
        for (std::size_t t = 0; t < p && inside; ++t) {
          const double lo = std::min(at(s, j, t), at(s, k, t));
          const double hi = std::max(at(s, j, t), at(s, k, t));
          inside = at(s, i, t) >= lo && at(s, i, t) <= hi;
        }
        if (inside) out[i] += 1.0;
      }
    }
  }
  for (auto& v : out) v /= pairs;
  return out;
}

inline std::vector<double> modified_band_depth(const CurveSample& s) {
  const std::size_t n = s.n(), p = s.p();
  std::vector<double> out(n, 0.0);
  double pairs = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = j + 1; k < n; ++k) {
      pairs += 1.0;
      for (std::size_t i = 0; i < n; ++i) {
        double inside = 0.0;
        for (std::size_t t = 0; t < p; ++t) {
          const double lo = std::min(at(s, j, t), at(s, k, t));
          const double hi = std::max(at(s, j, t), at(s, k, t));
          if (at(s, i, t) >= lo && at(s, i, t) <= hi) inside += 1.0;
        }
        out[i] += inside / static_cast<double>(p);
      }
    }
  }
  for (auto& v : out) v /= pairs;
  return out;
}

inline std::vector<double> total_variation_depth(const CurveSample& s) {
  const std::size_t n = s.n(), p = s.p();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < p; ++t) {
      double below = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        if (at(s, j, t) <= at(s, i, t)) below += 1.0;
      const double ph = below / static_cast<double>(n);
      out[i] += ph * (1.0 - ph);
    }
    out[i] /= static_cast<double>(p);
  }
  return out;
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Shape ratio var(conditional mean) / var from the conditional distribution
/// of R_t given R_s, computed as an explicit two-point variance.
inline double shape_ratio(double ps, double pt, double pst) {
  const double total = pt * (1.0 - pt);
  if (total == 0.0) return 1.0;
  const double a = ps > 0.0 ? pst / ps : 0.0;
  const double b = ps < 1.0 ? (pt - pst) / (1.0 - ps) : 0.0;
  const double m = ps * a + (1.0 - ps) * b;
  const double between = ps * (a - m) * (a - m) + (1.0 - ps) * (b - m) * (b - m);
  return between / total;
}

inline std::vector<double> modified_shape_similarity(const CurveSample& s) {
  const std::size_t n = s.n(), p = s.p();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> ratio, weight;
    double wsum = 0.0;
    for (std::size_t t = 1; t < p; ++t) {
      std::vector<double> col(n);
      for (std::size_t j = 0; j < n; ++j) col[j] = at(s, j, t);
      const double med = median(col);
      const double lt = med;
      const double ls = at(s, i, t - 1) - at(s, i, t) + med;
      double cs = 0, ct = 0, cst = 0;
      for (std::size_t j = 0; j < n; ++j) {
        const bool rs = at(s, j, t - 1) <= ls;
        const bool rt = at(s, j, t) <= lt;
        cs += rs;
        ct += rt;
        cst += rs && rt;
      }
      const double dn = static_cast<double>(n);
      ratio.push_back(shape_ratio(cs / dn, ct / dn, cst / dn));
      const double w = std::abs(at(s, i, t) - at(s, i, t - 1));
      weight.push_back(w);
      wsum += w;
    }
    for (std::size_t k = 0; k < ratio.size(); ++k) {
      const double w = wsum > 0.0 ? weight[k] / wsum : 1.0 / static_cast<double>(ratio.size());
      out[i] += ratio[k] * w;
    }
  }
  return out;
}

inline std::vector<double> linfinity_depth(const CurveSample& s) {
  const std::size_t n = s.n(), p = s.p();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double sup = 0.0;
      for (std::size_t t = 0; t < p; ++t) sup = std::max(sup, std::abs(at(s, i, t) - at(s, j, t)));
      total += sup;
    }
    out[i] = 1.0 / (1.0 + total / static_cast<double>(n));
  }
  return out;
}

/// ERLD: sorted extremeness-rank vectors compared lexicographically.
inline std::vector<double> extreme_rank_length(const CurveSample& s, int type /*0 two, 1 right, 2 left*/) {
  const std::size_t n = s.n(), p = s.p();
  std::vector<std::vector<double>> ranks(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < p; ++t) {
      double le = 0, ge = 0;
      for (std::size_t j = 0; j < n; ++j) {
        le += at(s, j, t) <= at(s, i, t);
        ge += at(s, j, t) >= at(s, i, t);
      }
      const double r = type == 0 ? std::min(le, ge) : type == 1 ? ge : le;
      ranks[i].push_back(r / static_cast<double>(n));
    }
    std::sort(ranks[i].begin(), ranks[i].end());
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double c = 0;
    for (std::size_t j = 0; j < n; ++j) c += !(ranks[i] < ranks[j]);  // ranks[j] <= ranks[i]
    out[i] = c / static_cast<double>(n);
  }
  return out;
}

/// Extremal depth through explicit depth CDFs evaluated on every observed level.
inline std::vector<double> extremal_depth(const CurveSample& s) {
  const std::size_t n = s.n(), p = s.p();
  std::vector<std::vector<double>> depth(n, std::vector<double>(p));
  std::vector<double> levels;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < p; ++t) {
      double less = 0, greater = 0;
      for (std::size_t j = 0; j < n; ++j) {
        less += at(s, j, t) < at(s, i, t);
        greater += at(s, j, t) > at(s, i, t);
      }
      depth[i][t] = 1.0 - std::abs(less - greater) / static_cast<double>(n);
      levels.push_back(depth[i][t]);
    }
  }
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  auto cdf = [&](std::size_t i) {
    std::vector<double> f;
    for (double r : levels) {
      double c = 0;
      for (double d : depth[i]) c += d <= r;
      f.push_back(c / static_cast<double>(p));
    }
    return f;
  };
  std::vector<std::vector<double>> F(n);
  for (std::size_t i = 0; i < n; ++i) F[i] = cdf(i);
  // j is weakly more extreme than i when at the first differing level F_j > F_i.
  auto weakly_more_extreme = [&](std::size_t j, std::size_t i) {
    for (std::size_t k = 0; k < levels.size(); ++k) {
      if (F[j][k] != F[i][k]) return F[j][k] > F[i][k];
    }
    return true;
  };
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double c = 0;
    for (std::size_t j = 0; j < n; ++j) c += weakly_more_extreme(j, i);
    out[i] = c / static_cast<double>(n);
  }
  return out;
}

inline double type7(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const double lo = std::floor(h);
  const auto l = static_cast<std::size_t>(lo);
  const std::size_t u = std::min(l + 1, v.size() - 1);
  return v[l] + (h - lo) * (v[u] - v[l]);
}

inline std::vector<double> directional_quantile(const CurveSample& s, double tail) {
  const std::size_t n = s.n(), p = s.p();
  std::vector<double> out(n, 0.0);
  for (std::size_t t = 0; t < p; ++t) {
    std::vector<double> col(n);
    for (std::size_t j = 0; j < n; ++j) col[j] = at(s, j, t);
    const double med = type7(col, 0.5);
    const double up = std::max(type7(col, 1.0 - tail) - med, 1e-12);
    const double dn = std::max(med - type7(col, tail), 1e-12);
    for (std::size_t i = 0; i < n; ++i) {
      const double v = std::max((col[i] - med) / up, (med - col[i]) / dn);
      out[i] = std::max(out[i], v);
    }
  }
  return out;
}

struct Muod {
  std::vector<double> shape, amplitude, magnitude;
};

/// Pairwise covariance loop with (p - 1) denominators; flat curves handled as
/// in the library (skipped as partners, I_S = I_A = 1 and I_M = |mean| themselves).
inline Muod muod_indices(const CurveSample& s) {
  const std::size_t n = s.n(), p = s.p();
  auto mean = [&](std::size_t i) {
    double m = 0;
    for (std::size_t t = 0; t < p; ++t) m += at(s, i, t);
    return m / static_cast<double>(p);
  };
  auto cov = [&](std::size_t i, std::size_t j) {
    const double mi = mean(i), mj = mean(j);
    double c = 0;
    for (std::size_t t = 0; t < p; ++t) c += (at(s, i, t) - mi) * (at(s, j, t) - mj);
    return c / static_cast<double>(p - 1);
  };
  Muod out;
  for (std::size_t i = 0; i < n; ++i) {
    const double vi = cov(i, i);
    if (vi == 0.0) {
      out.shape.push_back(1.0);
      out.amplitude.push_back(1.0);
      out.magnitude.push_back(std::abs(mean(i)));
      continue;
    }
    double rho = 0, beta = 0, alpha = 0, m = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const double vj = cov(j, j);
      if (vj == 0.0) continue;
      const double c = cov(i, j);
      rho += c / (std::sqrt(vi) * std::sqrt(vj));
      const double b = c / vj;
      beta += b;
      alpha += mean(i) - b * mean(j);
      m += 1;
    }
    out.shape.push_back(std::abs(rho / m - 1.0));
    out.amplitude.push_back(std::abs(beta / m - 1.0));
    out.magnitude.push_back(std::abs(alpha / m));
  }
  return out;
}

/// Squared Mahalanobis distances through a direct linear solve.
inline std::vector<double> mahalanobis(const Matrix& x, const std::vector<double>& center,
                                       const Eigen::MatrixXd& cov) {
  const auto d = static_cast<Eigen::Index>(x.cols());
  const auto qr = cov.colPivHouseholderQr();
  std::vector<double> out;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    Eigen::VectorXd diff(d);
    for (Eigen::Index k = 0; k < d; ++k) diff(k) = x(i, static_cast<std::size_t>(k)) - center[static_cast<std::size_t>(k)];
    const Eigen::VectorXd sol = qr.solve(diff);
    out.push_back(diff.dot(sol));
  }
  return out;
}

inline CurveSample random_sample(fdout::RandomSource& rng, std::size_t n, std::size_t p, bool with_ties = false) {
  Matrix m(n, p);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t t = 0; t < p; ++t)
      m(i, t) = with_ties ? static_cast<double>(rng.below(4)) : rng.normal();
  return CurveSample(std::move(m), fdout::uniform_grid(p));
}

inline CurveSample constant_curves(const std::vector<double>& levels, std::size_t p) {
  Matrix m(levels.size(), p);
  for (std::size_t i = 0; i < levels.size(); ++i)
    for (std::size_t t = 0; t < p; ++t) m(i, t) = levels[i];
  return CurveSample(std::move(m), fdout::uniform_grid(p));
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return INFINITY;
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == b[i]) continue;
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

}  // namespace oracle
