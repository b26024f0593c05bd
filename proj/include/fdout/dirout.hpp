#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "fdout/core.hpp"
#include "fdout/robust.hpp"

namespace fdout {

/// O(Y_i(t)) for every curve, grid point and coordinate; slice k is n×p.
struct DirectionalOutlyingnessField {
  std::vector<Matrix> values;

  std::size_t n() const noexcept { return values.empty() ? 0 : values.front().rows(); }
  std::size_t p() const noexcept { return values.empty() ? 0 : values.front().cols(); }
  std::size_t d() const noexcept { return values.size(); }
};

/// MO (n×d), VO and FO per curve; FO = |MO|^2 + VO.
struct OutlyingnessDecomposition {
  Matrix mo;
  std::vector<double> vo;
  std::vector<double> fo;
};

struct SdoOptions {
  std::size_t n_directions = 500;
};

namespace detail {

// Random unit directions in R^d, drawn once and shared by every grid point.
inline std::vector<std::vector<double>> unit_directions(std::size_t d, std::size_t count, RandomSource& rng) {
  std::vector<std::vector<double>> dirs;
  dirs.reserve(count);
  while (dirs.size() < count) {
    std::vector<double> u(d);
    double norm2 = 0.0;
    for (auto& c : u) {
      c = rng.normal();
      norm2 += c * c;
    }
    if (norm2 == 0.0) continue;
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& c : u) c *= inv;
    dirs.push_back(std::move(u));
  }
  return dirs;
}

inline std::vector<double> sdo_column(const MultiCurveSample& s, std::size_t t,
                                      const std::vector<std::vector<double>>& dirs) {
  const std::size_t n = s.n();
  const std::size_t d = s.d();
  std::vector<double> out(n, 0.0);
  if (d == 1) {
    const std::vector<double> col = s.dims[0].col(t);
    const RobustLocationScale ls = median_mad(col);
    for (std::size_t i = 0; i < n; ++i) out[i] = sdo_ratio(col[i] - ls.median, ls.mad);
    return out;
  }
  std::vector<double> proj(n);
  for (const auto& u : dirs) {
    for (std::size_t i = 0; i < n; ++i) {
      double v = 0.0;
      for (std::size_t k = 0; k < d; ++k) v += u[k] * s(i, t, k);
      proj[i] = v;
    }
    const RobustLocationScale ls = median_mad(proj);
    for (std::size_t i = 0; i < n; ++i) out[i] = std::max(out[i], sdo_ratio(proj[i] - ls.median, ls.mad));
  }
  return out;
}

}  // namespace detail

/// Pointwise Stahel–Donoho outlyingness, n×p. Exact for d = 1; for d >= 2 the
/// supremum over unit vectors is taken over `n_directions` random directions.
inline Matrix pointwise_sdo(const MultiCurveSample& sample, RandomSource& rng, SdoOptions opts = {}) {
  const std::size_t n = sample.n();
  const std::size_t p = sample.p();
  if (n < 3) throw Error(ErrorCode::TooFewCurves, "pointwise_sdo needs at least 3 curves");
  std::vector<std::vector<double>> dirs;
  if (sample.d() >= 2) dirs = detail::unit_directions(sample.d(), opts.n_directions, rng);
  Matrix out(n, p);
  parallel_for(p, [&](std::size_t t) {
    const std::vector<double> col = detail::sdo_column(sample, t, dirs);
    for (std::size_t i = 0; i < n; ++i) out(i, t) = col[i];
  });
  return out;
}

/// O(t) = SDO(t) * v(t), v the unit vector from the pointwise median Z(t)
/// (geometric median when d >= 2) towards Y(t); zero where Y(t) = Z(t).
inline DirectionalOutlyingnessField directional_outlyingness(const MultiCurveSample& sample, RandomSource& rng,
                                                             SdoOptions opts = {}) {
  const std::size_t n = sample.n();
  const std::size_t p = sample.p();
  const std::size_t d = sample.d();
  const Matrix sdo = pointwise_sdo(sample, rng, opts);
  DirectionalOutlyingnessField field{std::vector<Matrix>(d, Matrix(n, p))};
  parallel_for(p, [&](std::size_t t) {
    std::vector<double> center(d);
    if (d == 1) {
      center[0] = median_of(sample.dims[0].col(t));
    } else {
      Matrix pts(n, d);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < d; ++k) pts(i, k) = sample(i, t, k);
      center = geometric_median(pts);
    }
    for (std::size_t i = 0; i < n; ++i) {
      double norm2 = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = sample(i, t, k) - center[k];
        norm2 += diff * diff;
      }
      if (norm2 == 0.0) continue;
      const double norm = std::sqrt(norm2);
      for (std::size_t k = 0; k < d; ++k) {
        const double v = (sample(i, t, k) - center[k]) / norm;
        field.values[k](i, t) = v == 0.0 ? 0.0 : sdo(i, t) * v;
      }
    }
  });
  return field;
}

/// MO_i = sum_t O_i(t) w(t), VO_i = sum_t |O_i(t) - MO_i|^2 w(t), FO_i = sum_t |O_i(t)|^2 w(t).
/// Default weights are uniform 1/p. Curves with non-finite outlyingness get
/// MO = O's infinite direction and VO = FO = +infinity.
inline OutlyingnessDecomposition decompose(const DirectionalOutlyingnessField& field,
                                           std::optional<std::vector<double>> weights = std::nullopt) {
  const std::size_t n = field.n();
  const std::size_t p = field.p();
  const std::size_t d = field.d();
  std::vector<double> w(p, 1.0 / static_cast<double>(p));
  if (weights) {
    if (weights->size() != p) throw Error(ErrorCode::BadWeights, "weight vector length must equal p");
    double total = 0.0;
    for (double x : *weights) {
      if (!(x >= 0.0) || !std::isfinite(x)) throw Error(ErrorCode::BadWeights, "weights must be nonnegative");
      total += x;
    }
    if (std::abs(total - 1.0) > 1e-9) throw Error(ErrorCode::BadWeights, "weights must sum to 1");
    w = *weights;
  }

  OutlyingnessDecomposition out{Matrix(n, d), std::vector<double>(n), std::vector<double>(n)};
  const double inf = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    bool finite = true;
    for (std::size_t k = 0; k < d; ++k) {
      double mo = 0.0;
      for (std::size_t t = 0; t < p; ++t) {
        const double o = field.values[k](i, t);
        finite = finite && std::isfinite(o);
        mo += o * w[t];
      }
      out.mo(i, k) = mo;
    }
    if (!finite) {
      out.vo[i] = inf;
      out.fo[i] = inf;
      for (std::size_t k = 0; k < d; ++k)
        if (std::isnan(out.mo(i, k))) out.mo(i, k) = inf;
      continue;
    }
    double vo = 0.0;
    double fo = 0.0;
    for (std::size_t t = 0; t < p; ++t) {
      double dev2 = 0.0;
      double o2 = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double o = field.values[k](i, t);
        const double dev = o - out.mo(i, k);
        dev2 += dev * dev;
        o2 += o * o;
      }
      vo += dev2 * w[t];
      fo += o2 * w[t];
    }
    out.vo[i] = vo;
    out.fo[i] = fo;
  }
  return out;
}

}  // namespace fdout
