#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "fdout/core.hpp"

namespace fdout {

enum class Direction { DeeperIsLarger, OutlyingIsLarger };

/// Per-curve ordering scores together with the sense of the ordering.
struct DepthVector {
  std::vector<double> scores;
  Direction direction = Direction::DeeperIsLarger;
  std::string method;

  std::size_t size() const noexcept { return scores.size(); }

  /// Scores oriented so that larger always means deeper.
  std::vector<double> deeper_is_larger() const {
    if (direction == Direction::DeeperIsLarger) return scores;
    std::vector<double> out(scores.size());
    std::transform(scores.begin(), scores.end(), out.begin(), [](double s) { return -s; });
    return out;
  }
};

/// below(i,t) = #{j : Y_j(t) <= Y_i(t)},  above(i,t) = #{j : Y_j(t) >= Y_i(t)}; self included.
struct PointwiseRanks {
  std::vector<std::size_t> below;  // n×p row-major
  std::vector<std::size_t> above;
  std::size_t n = 0;
  std::size_t p = 0;

  std::size_t le(std::size_t i, std::size_t t) const { return below[i * p + t]; }
  std::size_t ge(std::size_t i, std::size_t t) const { return above[i * p + t]; }
};

inline PointwiseRanks pointwise_ranks(const Matrix& y) {
  PointwiseRanks r;
  r.n = y.rows();
  r.p = y.cols();
  r.below.assign(r.n * r.p, 0);
  r.above.assign(r.n * r.p, 0);
  parallel_for(r.p, [&](std::size_t t) {
    std::vector<std::size_t> order(r.n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return y(a, t) < y(b, t); });
    // Walk runs of equal values: a run occupying sorted positions [lo, hi)
    // has below = hi and above = n - lo for each member.
    std::size_t lo = 0;
    while (lo < r.n) {
      std::size_t hi = lo + 1;
      while (hi < r.n && y(order[hi], t) == y(order[lo], t)) ++hi;
      for (std::size_t k = lo; k < hi; ++k) {
        r.below[order[k] * r.p + t] = hi;
        r.above[order[k] * r.p + t] = r.n - lo;
      }
      lo = hi;
    }
  });
  return r;
}

namespace detail {

inline void require_curves(std::size_t n, std::size_t min_n, const char* what) {
  if (n < min_n) {
    throw Error(ErrorCode::TooFewCurves,
                std::string(what) + " needs at least " + std::to_string(min_n) + " curves, got " + std::to_string(n));
  }
}

inline double choose2(std::size_t k) { return 0.5 * static_cast<double>(k) * static_cast<double>(k > 0 ? k - 1 : 0); }

// score_i = #{j : key_j <=lex key_i} / n, where smaller keys are more extreme.
inline std::vector<double> lexicographic_depth(std::vector<std::vector<double>> keys) {
  const std::size_t n = keys.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  std::vector<double> out(n);
  std::size_t lo = 0;
  while (lo < n) {
    std::size_t hi = lo + 1;
    while (hi < n && keys[order[hi]] == keys[order[lo]]) ++hi;
    for (std::size_t k = lo; k < hi; ++k) out[order[k]] = static_cast<double>(hi) / static_cast<double>(n);
    lo = hi;
  }
  return out;
}

}  // namespace detail

/// Band depth with bands of two curves. Envelopes are inclusive and pairs
/// containing the evaluated curve itself count.
///
/// Without ties against curve i, a pair (j, k) contains curve i iff their sign
/// patterns relative to curve i are exact complements, which turns the pair
/// count into a hash-count of patterns. Ties fall back to pair enumeration.
inline DepthVector band_depth(const CurveSample& sample) {
  const Matrix& y = sample.values;
  const std::size_t n = y.rows();
  const std::size_t p = y.cols();
  detail::require_curves(n, 3, "band_depth");
  const double pairs = detail::choose2(n);
  DepthVector out{std::vector<double>(n), Direction::DeeperIsLarger, "bd"};

  parallel_for(n, [&](std::size_t i) {
    std::vector<std::vector<signed char>> signs;
    signs.reserve(n - 1);
    bool tie = false;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      std::vector<signed char> s(p);
      for (std::size_t t = 0; t < p; ++t) {
        const double diff = y(j, t) - y(i, t);
        s[t] = static_cast<signed char>((diff > 0) - (diff < 0));
        tie = tie || s[t] == 0;
      }
      signs.push_back(std::move(s));
    }

    // n - 1 pairs include curve i itself and always contain it.
    double count = static_cast<double>(n - 1);
    if (!tie) {
      std::map<std::vector<signed char>, std::size_t> freq;
      for (const auto& s : signs) ++freq[s];
      double matched = 0.0;
      for (const auto& [pattern, c] : freq) {
        std::vector<signed char> flipped(pattern.size());
        std::transform(pattern.begin(), pattern.end(), flipped.begin(), [](signed char v) {
          return static_cast<signed char>(-v);
        });
        if (auto it = freq.find(flipped); it != freq.end()) matched += static_cast<double>(c * it->second);
      }
      count += matched / 2.0;
    } else {
      for (std::size_t a = 0; a < signs.size(); ++a) {
        for (std::size_t b = a + 1; b < signs.size(); ++b) {
          bool inside = true;
          for (std::size_t t = 0; t < p && inside; ++t) inside = signs[a][t] * signs[b][t] <= 0;
          if (inside) count += 1.0;
        }
      }
    }
    out.scores[i] = count / pairs;
  });
  return out;
}

/// Modified band depth from pointwise ranks: at each t the number of pairs
/// whose envelope contains Y_i(t) is C(n,2) - C(#above strictly, 2) - C(#below strictly, 2).
inline DepthVector modified_band_depth(const CurveSample& sample) {
  const std::size_t n = sample.n();
  const std::size_t p = sample.p();
  detail::require_curves(n, 3, "modified_band_depth");
  const PointwiseRanks r = pointwise_ranks(sample.values);
  const double pairs = detail::choose2(n);
  DepthVector out{std::vector<double>(n), Direction::DeeperIsLarger, "mbd"};
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (std::size_t t = 0; t < p; ++t) {
      const std::size_t strictly_above = n - r.le(i, t);
      const std::size_t strictly_below = n - r.ge(i, t);
      total += pairs - detail::choose2(strictly_above) - detail::choose2(strictly_below);
    }
    out.scores[i] = total / (pairs * static_cast<double>(p));
  }
  return out;
}

enum class ErldType { TwoSided, OneSidedRight, OneSidedLeft };

inline std::string to_string(ErldType t) {
  switch (t) {
    case ErldType::TwoSided: return "two_sided";
    case ErldType::OneSidedRight: return "one_sided_right";
    case ErldType::OneSidedLeft: return "one_sided_left";
  }
  return "two_sided";
}

inline ErldType parse_erld_type(const std::string& s) {
  if (s == "two_sided") return ErldType::TwoSided;
  if (s == "one_sided_right") return ErldType::OneSidedRight;
  if (s == "one_sided_left") return ErldType::OneSidedLeft;
  throw Error(ErrorCode::InvalidArgument, "unknown ERLD type '" + s + "'");
}

/// Extreme rank length depth. Each curve's pointwise extremeness ranks are
/// sorted ascending and compared lexicographically; smaller is more extreme.
inline DepthVector extreme_rank_length(const CurveSample& sample, ErldType type = ErldType::TwoSided) {
  const std::size_t n = sample.n();
  const std::size_t p = sample.p();
  detail::require_curves(n, 2, "extreme_rank_length");
  const PointwiseRanks r = pointwise_ranks(sample.values);
  const double dn = static_cast<double>(n);
  std::vector<std::vector<double>> keys(n, std::vector<double>(p));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < p; ++t) {
      std::size_t rank = 0;
      switch (type) {
        case ErldType::TwoSided: rank = std::min(r.le(i, t), r.ge(i, t)); break;
        case ErldType::OneSidedRight: rank = r.ge(i, t); break;
        case ErldType::OneSidedLeft: rank = r.le(i, t); break;
      }
      keys[i][t] = static_cast<double>(rank) / dn;
    }
    std::sort(keys[i].begin(), keys[i].end());
  }
  return {detail::lexicographic_depth(std::move(keys)), Direction::DeeperIsLarger, "erld"};
}

/// Directional quantile outlyingness: sup over t of the distance to the
/// pointwise median in units of the median-to-tail-quantile spread on the
/// side the curve lies. Quantiles are type 7; spreads are floored at 1e-12.
inline DepthVector directional_quantile(const CurveSample& sample, double tail = 0.025) {
  const std::size_t n = sample.n();
  const std::size_t p = sample.p();
  detail::require_curves(n, 5, "directional_quantile");
  if (!(tail > 0.0 && tail < 0.5)) throw Error(ErrorCode::InvalidTail, "tail must lie in (0, 0.5)");
  constexpr double floor = 1e-12;
  DepthVector out{std::vector<double>(n, -std::numeric_limits<double>::infinity()), Direction::OutlyingIsLarger,
                  "dq"};
  for (std::size_t t = 0; t < p; ++t) {
    std::vector<double> col = sample.values.col(t);
    std::sort(col.begin(), col.end());
    const double lo = quantile_sorted(col, tail);
    const double mid = quantile_sorted(col, 0.5);
    const double hi = quantile_sorted(col, 1.0 - tail);
    const double up = std::max(hi - mid, floor);
    const double down = std::max(mid - lo, floor);
    for (std::size_t i = 0; i < n; ++i) {
      const double y = sample.values(i, t);
      const double v = std::max((y - mid) / up, (mid - y) / down);
      out.scores[i] = std::max(out.scores[i], v);
    }
  }
  return out;
}

/// L-infinity depth: 1 / (1 + mean_j sup_t |Y_i(t) - Y_j(t)|), self included.
inline DepthVector linfinity_depth(const CurveSample& sample) {
  const std::size_t n = sample.n();
  const std::size_t p = sample.p();
  detail::require_curves(n, 2, "linfinity_depth");
  const Matrix& y = sample.values;
  DepthVector out{std::vector<double>(n), Direction::DeeperIsLarger, "linfinity"};
  parallel_for(n, [&](std::size_t i) {
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double sup = 0.0;
      for (std::size_t t = 0; t < p; ++t) sup = std::max(sup, std::abs(y(i, t) - y(j, t)));
      total += sup;
    }
    out.scores[i] = 1.0 / (1.0 + total / static_cast<double>(n));
  });
  return out;
}

/// Extremal depth. Pointwise depth d_i(t) = 1 - |#{Y_j < Y_i} - #{Y_j > Y_i}| / n;
/// comparing depth CDFs from the lowest level upward is the same as comparing
/// the ascending-sorted pointwise depth vectors lexicographically.
inline DepthVector extremal_depth(const CurveSample& sample) {
  const std::size_t n = sample.n();
  const std::size_t p = sample.p();
  detail::require_curves(n, 2, "extremal_depth");
  const PointwiseRanks r = pointwise_ranks(sample.values);
  const auto dn = static_cast<double>(n);
  std::vector<std::vector<double>> keys(n, std::vector<double>(p));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < p; ++t) {
      const double less = static_cast<double>(n - r.ge(i, t));
      const double greater = static_cast<double>(n - r.le(i, t));
      keys[i][t] = 1.0 - std::abs(less - greater) / dn;
    }
    std::sort(keys[i].begin(), keys[i].end());
  }
  return {detail::lexicographic_depth(std::move(keys)), Direction::DeeperIsLarger, "extremal"};
}

}  // namespace fdout
