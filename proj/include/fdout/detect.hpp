#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "fdout/core.hpp"
#include "fdout/depths.hpp"
#include "fdout/dirout.hpp"
#include "fdout/robust.hpp"
#include "fdout/tvd.hpp"

namespace fdout {

// ---------------------------------------------------------------------------
// Functional boxplot
// ---------------------------------------------------------------------------

struct FunctionalBoxplotResult {
  DepthVector depth;
  IndexSet central_indices;
  std::vector<double> envelope_lower, envelope_upper;
  std::vector<double> fence_lower, fence_upper;
  IndexSet outliers;
};

/// Exceedances smaller than this fraction of the largest absolute value in the
/// sample are treated as rounding noise, so curves equal up to floating point never flag.
inline constexpr double kFenceRelativeSlack = 1e-12;

/// Functional boxplot with an explicit central-region size (number of curves).
inline FunctionalBoxplotResult functional_boxplot_sized(const CurveSample& sample, const DepthVector& depth,
                                                        std::size_t central_count, double factor = 1.5) {
  const std::size_t n = sample.n();
  const std::size_t p = sample.p();
  if (depth.size() != n) throw Error(ErrorCode::InvalidArgument, "depth vector length differs from sample size");
  if (!(factor > 0.0)) throw Error(ErrorCode::InvalidArgument, "boxplot factor must be positive");
  if (n == 0) throw Error(ErrorCode::TooFewCurves, "functional boxplot of an empty sample");
  central_count = std::clamp<std::size_t>(central_count, 1, n);

  const std::vector<double> deep = depth.deeper_is_larger();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return deep[a] > deep[b]; });

  FunctionalBoxplotResult out;
  out.depth = depth;
  out.central_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(central_count));
  std::sort(out.central_indices.begin(), out.central_indices.end());
  out.envelope_lower.assign(p, std::numeric_limits<double>::infinity());
  out.envelope_upper.assign(p, -std::numeric_limits<double>::infinity());
  for (auto i : out.central_indices) {
    for (std::size_t t = 0; t < p; ++t) {
      out.envelope_lower[t] = std::min(out.envelope_lower[t], sample.values(i, t));
      out.envelope_upper[t] = std::max(out.envelope_upper[t], sample.values(i, t));
    }
  }
  out.fence_lower.resize(p);
  out.fence_upper.resize(p);
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (double v : sample.values.row(i))
      if (std::isfinite(v)) scale = std::max(scale, std::abs(v));
  const double slack = kFenceRelativeSlack * scale;
  for (std::size_t t = 0; t < p; ++t) {
    const double range = out.envelope_upper[t] - out.envelope_lower[t];
    out.fence_lower[t] = out.envelope_lower[t] - factor * range;
    out.fence_upper[t] = out.envelope_upper[t] + factor * range;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < p; ++t) {
      const double v = sample.values(i, t);
      if (v < out.fence_lower[t] - slack || v > out.fence_upper[t] + slack) {
        out.outliers.push_back(i);
        break;
      }
    }
  }
  return out;
}

/// Central region = pointwise envelope of the ceil(n * central_region) deepest
/// curves; a curve is an outlier if it leaves envelope -/+ factor * range anywhere.
inline FunctionalBoxplotResult functional_boxplot(const CurveSample& sample, const DepthVector& depth,
                                                  double central_region = 0.5, double factor = 1.5) {
  if (!(central_region > 0.0 && central_region < 1.0)) {
    throw Error(ErrorCode::BadCentralRegion, "central_region must lie in (0, 1)");
  }
  const auto count = static_cast<std::size_t>(std::ceil(static_cast<double>(sample.n()) * central_region - 1e-12));
  return functional_boxplot_sized(sample, depth, count, factor);
}

// ---------------------------------------------------------------------------
// MS-Plot
// ---------------------------------------------------------------------------

struct MsplotOptions {
  double level = 0.007;  // F 0.993 quantile
  std::optional<double> coverage;  // MCD coverage; unset = maximum breakdown
  SdoOptions sdo;
};

struct MsplotResult {
  IndexSet outliers;
  Matrix mo;                       // n×d
  std::vector<double> vo;          // n
  std::vector<double> distances;   // squared robust distances
  FCutoff cutoff;
  McdFit fit;
};

/// Robust distances of the (MO, VO) points. Curves with non-finite
/// outlyingness (MAD-zero sentinel) are excluded from the MCD fit and get an
/// infinite distance.
inline std::vector<double> mo_vo_distances(const OutlyingnessDecomposition& dec, RandomSource& rng,
                                           const MsplotOptions& opts, McdFit* fit_out = nullptr) {
  const std::size_t n = dec.vo.size();
  const std::size_t d = dec.mo.cols();
  std::vector<std::size_t> finite_rows;
  for (std::size_t i = 0; i < n; ++i) {
    bool ok = std::isfinite(dec.vo[i]);
    for (std::size_t k = 0; k < d; ++k) ok = ok && std::isfinite(dec.mo(i, k));
    if (ok) finite_rows.push_back(i);
  }
  Matrix pts(finite_rows.size(), d + 1);
  for (std::size_t r = 0; r < finite_rows.size(); ++r) {
    for (std::size_t k = 0; k < d; ++k) pts(r, k) = dec.mo(finite_rows[r], k);
    pts(r, d) = dec.vo[finite_rows[r]];
  }
  McdOptions mcd;
  mcd.coverage = opts.coverage;
  McdFit fit = fast_mcd(pts, rng, mcd);
  const std::vector<double> dist = robust_distances(pts, fit);
  std::vector<double> out(n, std::numeric_limits<double>::infinity());
  for (std::size_t r = 0; r < finite_rows.size(); ++r) out[finite_rows[r]] = dist[r];
  if (fit_out) *fit_out = std::move(fit);
  return out;
}

/// MS-Plot detection: FastMCD on (MO, VO), flags above the Hardin–Rocke cutoff.
inline MsplotResult msplot(const MultiCurveSample& sample, RandomSource& rng, MsplotOptions opts = {}) {
  const std::size_t n = sample.n();
  const std::size_t d = sample.d();
  if (n <= 2 * (d + 1) + 2) {
    throw Error(ErrorCode::TooFewCurves, "msplot needs more than 2(d+1)+2 curves");
  }
  const DirectionalOutlyingnessField field = directional_outlyingness(sample, rng, opts.sdo);
  const OutlyingnessDecomposition dec = decompose(field);
  MsplotResult out;
  out.mo = dec.mo;
  out.vo = dec.vo;
  out.distances = mo_vo_distances(dec, rng, opts, &out.fit);
  out.cutoff = hardin_rocke_cutoff(n, d + 1, opts.coverage, opts.level);
  for (std::size_t i = 0; i < n; ++i)
    if (out.distances[i] > out.cutoff.threshold) out.outliers.push_back(i);
  return out;
}

inline MsplotResult msplot(const CurveSample& sample, RandomSource& rng, MsplotOptions opts = {}) {
  return msplot(MultiCurveSample(sample), rng, opts);
}

// ---------------------------------------------------------------------------
// TVD / MSS two-stage detector
// ---------------------------------------------------------------------------

struct TvdmssOptions {
  double emp_factor_mss = 1.5;
  double emp_factor_tvd = 1.5;
  double central_region_tvd = 0.5;
};

struct TvdmssResult {
  IndexSet shape_outliers;
  IndexSet magnitude_outliers;
  IndexSet outliers;
  std::vector<double> tvd;
  std::vector<double> mss;
};

/// Indices below Q1 - factor * IQR (lower) or above Q3 + factor * IQR (upper), type-7 quartiles.
inline IndexSet boxplot_flags(const std::vector<double>& xs, double factor, bool upper) {
  std::vector<double> sorted = xs;
  std::sort(sorted.begin(), sorted.end());
  const double q1 = quantile_sorted(sorted, 0.25);
  const double q3 = quantile_sorted(sorted, 0.75);
  const double iqr = q3 - q1;
  IndexSet out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (upper ? xs[i] > q3 + factor * iqr : xs[i] < q1 - factor * iqr) out.push_back(i);
  }
  return out;
}

inline TvdmssResult tvdmss(const CurveSample& sample, TvdmssOptions opts = {}) {
  const std::size_t n = sample.n();
  detail::require_curves(n, 5, "tvdmss");
  if (!(opts.central_region_tvd > 0.0 && opts.central_region_tvd < 1.0)) {
    throw Error(ErrorCode::BadCentralRegion, "central_region_tvd must lie in (0, 1)");
  }
  TvdmssResult out;
  out.tvd = total_variation_depth(sample);
  out.mss = modified_shape_similarity(sample);
  out.shape_outliers = boxplot_flags(out.mss, opts.emp_factor_mss, /*upper=*/false);

  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < n; ++i)
    if (!std::binary_search(out.shape_outliers.begin(), out.shape_outliers.end(), i)) keep.push_back(i);
  if (!keep.empty()) {
    Matrix rest(keep.size(), sample.p());
    DepthVector depth{{}, Direction::DeeperIsLarger, "tvd"};
    for (std::size_t r = 0; r < keep.size(); ++r) {
      std::copy(sample.values.row(keep[r]).begin(), sample.values.row(keep[r]).end(), rest.row(r).begin());
      depth.scores.push_back(out.tvd[keep[r]]);
    }
    const auto central = static_cast<std::size_t>(
        std::ceil(static_cast<double>(n) * opts.central_region_tvd - 1e-12));
    const FunctionalBoxplotResult fb =
        functional_boxplot_sized(CurveSample(std::move(rest), sample.grid), depth, central, opts.emp_factor_tvd);
    for (auto r : fb.outliers) out.magnitude_outliers.push_back(keep[r]);
  }
  out.outliers = out.shape_outliers;
  out.outliers.insert(out.outliers.end(), out.magnitude_outliers.begin(), out.magnitude_outliers.end());
  out.outliers = normalize_set(std::move(out.outliers));
  return out;
}

// ---------------------------------------------------------------------------
// Sequential transformations
// ---------------------------------------------------------------------------

/// Univariate curves of pointwise SDO magnitudes.
inline CurveSample o_transform(const MultiCurveSample& sample, RandomSource& rng, SdoOptions opts = {}) {
  return CurveSample(pointwise_sdo(sample, rng, opts), sample.grid, sample.ids);
}

/// Subtract each curve's grid mean.
inline CurveSample center_curves(const CurveSample& s) {
  CurveSample out = s;
  for (std::size_t i = 0; i < s.n(); ++i) {
    auto row = out.values.row(i);
    const double mean = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(s.p());
    for (auto& v : row) v -= mean;
  }
  return out;
}

/// Center, then divide by the root-mean-square over the grid; flat curves stay
/// zero and are counted in `degenerate`.
inline CurveSample normalize_curves(const CurveSample& s, std::size_t* degenerate = nullptr) {
  CurveSample out = center_curves(s);
  std::size_t flat = 0;
  for (std::size_t i = 0; i < s.n(); ++i) {
    auto row = out.values.row(i);
    double ss = 0.0;
    for (double v : row) ss += v * v;
    const double rms = std::sqrt(ss / static_cast<double>(s.p()));
    if (rms == 0.0) {
      ++flat;
      continue;
    }
    for (auto& v : row) v /= rms;
  }
  if (degenerate) *degenerate = flat;
  return out;
}

/// Lag-1 differences; the first grid point is dropped.
inline CurveSample difference_curves(const CurveSample& s) {
  if (s.p() < 3) throw Error(ErrorCode::TooFewPoints, "differencing needs at least 3 grid points");
  Matrix out(s.n(), s.p() - 1);
  for (std::size_t i = 0; i < s.n(); ++i)
    for (std::size_t t = 1; t < s.p(); ++t) out(i, t - 1) = s.values(i, t) - s.values(i, t - 1);
  return CurveSample(std::move(out), s.grid.drop_front(), s.ids);
}

enum class Transform { T0, D0, T1, T2, D1, D2, O };

inline std::string to_string(Transform t) {
  switch (t) {
    case Transform::T0: return "T0";
    case Transform::D0: return "D0";
    case Transform::T1: return "T1";
    case Transform::T2: return "T2";
    case Transform::D1: return "D1";
    case Transform::D2: return "D2";
    case Transform::O: return "O";
  }
  return "?";
}

inline Transform parse_transform(const std::string& s) {
  for (auto t : {Transform::T0, Transform::D0, Transform::T1, Transform::T2, Transform::D1, Transform::D2,
                 Transform::O}) {
    if (to_string(t) == s) return t;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown transformation '" + s + "'");
}

enum class DepthMethod { BD, MBD, ERLD, DQ, LInf, Extremal, TVD, RMD };

inline DepthMethod parse_depth_method(const std::string& s) {
  if (s == "bd") return DepthMethod::BD;
  if (s == "mbd") return DepthMethod::MBD;
  if (s == "erld") return DepthMethod::ERLD;
  if (s == "dq") return DepthMethod::DQ;
  if (s == "linf" || s == "linfinity") return DepthMethod::LInf;
  if (s == "ed" || s == "extremal") return DepthMethod::Extremal;
  if (s == "tvd") return DepthMethod::TVD;
  if (s == "rmd") return DepthMethod::RMD;
  throw Error(ErrorCode::UnknownDepthMethod, "unknown depth method '" + s + "'");
}

inline std::string to_string(DepthMethod m) {
  switch (m) {
    case DepthMethod::BD: return "bd";
    case DepthMethod::MBD: return "mbd";
    case DepthMethod::ERLD: return "erld";
    case DepthMethod::DQ: return "dq";
    case DepthMethod::LInf: return "linfinity";
    case DepthMethod::Extremal: return "extremal";
    case DepthMethod::TVD: return "tvd";
    case DepthMethod::RMD: return "rmd";
  }
  return "?";
}

/// Robust distance of each curve's (MO, VO) point; larger is more outlying.
inline DepthVector robust_mahalanobis_ordering(const CurveSample& sample, RandomSource& rng) {
  const DirectionalOutlyingnessField field = directional_outlyingness(MultiCurveSample(sample), rng);
  const OutlyingnessDecomposition dec = decompose(field);
  return {mo_vo_distances(dec, rng, MsplotOptions{}), Direction::OutlyingIsLarger, "rmd"};
}

/// Ordering of `sample` by the named method.
inline DepthVector compute_depth(const CurveSample& sample, DepthMethod method, ErldType erld_type,
                                 RandomSource& rng) {
  switch (method) {
    case DepthMethod::BD: return band_depth(sample);
    case DepthMethod::MBD: return modified_band_depth(sample);
    case DepthMethod::ERLD: return extreme_rank_length(sample, erld_type);
    case DepthMethod::DQ: return directional_quantile(sample);
    case DepthMethod::LInf: return linfinity_depth(sample);
    case DepthMethod::Extremal: return extremal_depth(sample);
    case DepthMethod::TVD: return {total_variation_depth(sample), Direction::DeeperIsLarger, "tvd"};
    case DepthMethod::RMD: return robust_mahalanobis_ordering(sample, rng);
  }
  throw Error(ErrorCode::UnknownDepthMethod, "unhandled depth method");
}

struct SeqStage {
  std::string label;
  IndexSet outliers;
  std::optional<CurveSample> data;  // present when save_data is set
};

struct SeqTransformResult {
  std::vector<SeqStage> stages;
  std::vector<std::string> warnings;
};

struct SeqTransformOptions {
  std::vector<Transform> sequence{Transform::T0, Transform::T1, Transform::T2};
  DepthMethod depth_method = DepthMethod::MBD;
  ErldType erld_type = ErldType::TwoSided;
  bool save_data = false;
  double central_region = 0.5;
  double factor = 1.5;
};

/// Stage labels with duplicates suffixed _1, _2, ... in order of appearance.
inline std::vector<std::string> stage_labels(const std::vector<Transform>& seq, bool* had_duplicates = nullptr) {
  std::map<std::string, std::size_t> total, seen;
  for (auto t : seq) ++total[to_string(t)];
  std::vector<std::string> out;
  bool dup = false;
  for (auto t : seq) {
    const std::string name = to_string(t);
    if (total[name] > 1) {
      dup = true;
      out.push_back(name + "_" + std::to_string(++seen[name]));
    } else {
      out.push_back(name);
    }
  }
  if (had_duplicates) *had_duplicates = dup;
  return out;
}

/// Runs the transformations left to right, flagging outliers with a
/// functional boxplot after each stage. All curves are kept in every stage.
inline SeqTransformResult seq_transform(const MultiCurveSample& input, RandomSource& rng,
                                        const SeqTransformOptions& opts = {}) {
  if (opts.sequence.empty()) throw Error(ErrorCode::EmptySequence, "the transformation sequence is empty");
  SeqTransformResult out;
  bool dup = false;
  const std::vector<std::string> labels = stage_labels(opts.sequence, &dup);
  if (dup) out.warnings.push_back("repeated transformations in the sequence; stage labels were suffixed");

  std::optional<MultiCurveSample> multi;
  std::optional<CurveSample> current;
  if (input.d() == 1) {
    current = input.to_univariate();
  } else {
    multi = input;
  }
  for (std::size_t k = 0; k < opts.sequence.size(); ++k) {
    const Transform tr = opts.sequence[k];
    if (tr == Transform::O) {
      if (!multi) throw Error(ErrorCode::OOnUnivariate, "the O transformation needs multivariate input");
      current = o_transform(*multi, rng);
      multi.reset();
    } else {
      if (!current) {
        throw Error(ErrorCode::MultivariateStage,
                    "stage " + to_string(tr) + " needs univariate data; start multivariate sequences with O");
      }
      switch (tr) {
        case Transform::T1: current = center_curves(*current); break;
        case Transform::T2: {
          std::size_t flat = 0;
          current = normalize_curves(*current, &flat);
          if (flat > 0) {
            out.warnings.push_back(labels[k] + ": " + std::to_string(flat) + " flat curve(s) left as zeros");
          }
          break;
        }
        case Transform::D1:
        case Transform::D2: current = difference_curves(*current); break;
        default: break;  // T0, D0: no transformation
      }
    }
    const DepthVector depth = compute_depth(*current, opts.depth_method, opts.erld_type, rng);
    const FunctionalBoxplotResult fb = functional_boxplot(*current, depth, opts.central_region, opts.factor);
    SeqStage stage{labels[k], fb.outliers, std::nullopt};
    if (opts.save_data) stage.data = *current;
    out.stages.push_back(std::move(stage));
  }
  return out;
}

inline SeqTransformResult seq_transform(const CurveSample& input, RandomSource& rng,
                                        const SeqTransformOptions& opts = {}) {
  if (std::find(opts.sequence.begin(), opts.sequence.end(), Transform::O) != opts.sequence.end()) {
    throw Error(ErrorCode::OOnUnivariate, "the O transformation needs multivariate input");
  }
  return seq_transform(MultiCurveSample(input), rng, opts);
}

/// S_k minus the union of all earlier stage sets, per stage.
inline std::vector<IndexSet> stage_set_differences(const SeqTransformResult& r) {
  std::vector<IndexSet> out;
  IndexSet seen;
  for (const auto& st : r.stages) {
    IndexSet fresh;
    std::set_difference(st.outliers.begin(), st.outliers.end(), seen.begin(), seen.end(), std::back_inserter(fresh));
    out.push_back(fresh);
    IndexSet merged;
    std::set_union(seen.begin(), seen.end(), st.outliers.begin(), st.outliers.end(), std::back_inserter(merged));
    seen = std::move(merged);
  }
  return out;
}

}  // namespace fdout
