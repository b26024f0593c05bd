#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

namespace fdout {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

enum class ErrorCode {
  // input / validation
  NonFiniteValue,
  RaggedRows,
  NonIncreasingGrid,
  DegenerateInterval,
  EmptyInput,
  TooFewCurves,
  TooFewPoints,
  InvalidTail,
  InvalidLevel,
  InvalidArgument,
  BadWeights,
  BadCentralRegion,
  BadRate,
  BadModel,
  EmptySequence,
  OOnUnivariate,
  MultivariateStage,
  UnknownDepthMethod,
  ParseError,
  ShapeMismatch,
  InconsistentReport,
  IoError,
  // numeric failure
  NonConvergence,
  SingularSubsets,
  SingularCovariance,
  CovarianceNotPD,
  AllDegenerate,
};

inline std::string_view error_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::RaggedRows: return "RaggedRows";
    case ErrorCode::NonIncreasingGrid: return "NonIncreasingGrid";
    case ErrorCode::DegenerateInterval: return "DegenerateInterval";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::TooFewCurves: return "TooFewCurves";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::InvalidTail: return "InvalidTail";
    case ErrorCode::InvalidLevel: return "InvalidLevel";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::BadWeights: return "BadWeights";
    case ErrorCode::BadCentralRegion: return "BadCentralRegion";
    case ErrorCode::BadRate: return "BadRate";
    case ErrorCode::BadModel: return "BadModel";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::OOnUnivariate: return "OOnUnivariate";
    case ErrorCode::MultivariateStage: return "MultivariateStage";
    case ErrorCode::UnknownDepthMethod: return "UnknownDepthMethod";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::InconsistentReport: return "InconsistentReport";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::SingularSubsets: return "SingularSubsets";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::CovarianceNotPD: return "CovarianceNotPD";
    case ErrorCode::AllDegenerate: return "AllDegenerate";
  }
  return "Unknown";
}

// Numeric failures are distinguished from bad input (CLI exit 3 vs 2).
inline bool is_numeric_failure(ErrorCode c) {
  switch (c) {
    case ErrorCode::NonConvergence:
    case ErrorCode::SingularSubsets:
    case ErrorCode::SingularCovariance:
    case ErrorCode::CovarianceNotPD:
    case ErrorCode::AllDegenerate:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const noexcept { return error_name(code_); }

 private:
  ErrorCode code_;
};

// ---------------------------------------------------------------------------
// Dense row-major matrix
// ---------------------------------------------------------------------------

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw Error(ErrorCode::RaggedRows, "matrix data size does not match its shape");
    }
  }

  static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return {};
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != m.cols_) {
        throw Error(ErrorCode::RaggedRows, "row " + std::to_string(i) + " has " +
                                               std::to_string(rows[i].size()) + " values, expected " +
                                               std::to_string(m.cols_));
      }
      std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
    }
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::vector<double> col(std::size_t j) const {
    std::vector<double> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
    return out;
  }

  const std::vector<double>& data() const noexcept { return data_; }
  std::vector<double>& data() noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Grid and samples
// ---------------------------------------------------------------------------

class Grid {
 public:
  Grid() = default;
  explicit Grid(std::vector<double> points) : points_(std::move(points)) {
    if (points_.size() < 2) {
      throw Error(ErrorCode::TooFewPoints, "a grid needs at least 2 points");
    }
    for (std::size_t k = 0; k < points_.size(); ++k) {
      if (!std::isfinite(points_[k])) {
        throw Error(ErrorCode::NonFiniteValue, "grid point " + std::to_string(k) + " is not finite");
      }
      if (k > 0 && !(points_[k] > points_[k - 1])) {
        throw Error(ErrorCode::NonIncreasingGrid,
                    "grid point " + std::to_string(k) + " does not exceed its predecessor");
      }
    }
  }

  std::size_t size() const noexcept { return points_.size(); }
  const std::vector<double>& points() const noexcept { return points_; }
  double operator[](std::size_t k) const { return points_[k]; }
  double interval_length() const { return points_.back() - points_.front(); }

  // True when consecutive spacings agree to a relative 1e-9.
  bool is_uniform() const {
    const double step = interval_length() / static_cast<double>(points_.size() - 1);
    for (std::size_t k = 1; k < points_.size(); ++k) {
      if (std::abs(points_[k] - points_[k - 1] - step) > 1e-9 * std::max(1.0, std::abs(step))) {
        return false;
      }
    }
    return true;
  }

  // Grid with the first `k` points removed (used by lag differencing).
  Grid drop_front(std::size_t k = 1) const {
    return Grid(std::vector<double>(points_.begin() + static_cast<std::ptrdiff_t>(k), points_.end()));
  }

  bool operator==(const Grid&) const = default;

 private:
  std::vector<double> points_;
};

/// `p` equally spaced points from `a` to `b`, both inclusive.
inline Grid uniform_grid(std::size_t p, double a = 0.0, double b = 1.0) {
  if (!(a < b)) throw Error(ErrorCode::DegenerateInterval, "uniform_grid requires a < b");
  if (p < 2) throw Error(ErrorCode::TooFewPoints, "uniform_grid requires p >= 2");
  std::vector<double> pts(p);
  const double step = (b - a) / static_cast<double>(p - 1);
  for (std::size_t k = 0; k < p; ++k) pts[k] = a + step * static_cast<double>(k);
  pts.back() = b;
  return Grid(std::move(pts));
}

/// n curves evaluated on a common grid; row i holds curve i.
struct CurveSample {
  Matrix values;
  Grid grid;
  std::vector<std::string> ids;  // empty or one per curve

  CurveSample() = default;
  CurveSample(Matrix v, Grid g, std::vector<std::string> labels = {})
      : values(std::move(v)), grid(std::move(g)), ids(std::move(labels)) {}

  std::size_t n() const noexcept { return values.rows(); }
  std::size_t p() const noexcept { return values.cols(); }

  bool operator==(const CurveSample&) const = default;
};

/// n curves taking values in R^d; `dims[k]` is the n×p slice of coordinate k.
struct MultiCurveSample {
  std::vector<Matrix> dims;
  Grid grid;
  std::vector<std::string> ids;

  MultiCurveSample() = default;
  MultiCurveSample(std::vector<Matrix> slices, Grid g, std::vector<std::string> labels = {})
      : dims(std::move(slices)), grid(std::move(g)), ids(std::move(labels)) {}

  explicit MultiCurveSample(const CurveSample& s) : dims{s.values}, grid(s.grid), ids(s.ids) {}

  std::size_t n() const noexcept { return dims.empty() ? 0 : dims.front().rows(); }
  std::size_t p() const noexcept { return dims.empty() ? 0 : dims.front().cols(); }
  std::size_t d() const noexcept { return dims.size(); }

  double operator()(std::size_t i, std::size_t t, std::size_t k) const { return dims[k](i, t); }

  CurveSample to_univariate() const {
    if (dims.size() != 1) {
      throw Error(ErrorCode::InvalidArgument, "only a d = 1 sample converts to a CurveSample");
    }
    return CurveSample(dims.front(), grid, ids);
  }

  bool operator==(const MultiCurveSample&) const = default;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct ValidationResult {
  bool ok = true;
  std::optional<ErrorCode> code;
  std::string message;
  std::size_t row = 0;  // location of the first violation, when applicable
  std::size_t col = 0;

  explicit operator bool() const noexcept { return ok; }
};

namespace detail {

inline ValidationResult check_grid(const std::vector<double>& pts) {
  if (pts.size() < 2) return {false, ErrorCode::TooFewPoints, "grid has fewer than 2 points"};
  for (std::size_t k = 1; k < pts.size(); ++k) {
    if (!(pts[k] > pts[k - 1])) {
      return {false, ErrorCode::NonIncreasingGrid, "grid not strictly increasing at point " + std::to_string(k),
              0, k};
    }
  }
  return {};
}

inline ValidationResult check_matrix(const Matrix& m, std::size_t p) {
  if (m.rows() == 0) return {false, ErrorCode::EmptyInput, "sample has no curves"};
  if (m.cols() != p) {
    return {false, ErrorCode::RaggedRows, "rows have " + std::to_string(m.cols()) + " values but the grid has " +
                                              std::to_string(p)};
  }
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (!std::isfinite(m(i, j))) {
        return {false, ErrorCode::NonFiniteValue,
                "non-finite value at (" + std::to_string(i) + ", " + std::to_string(j) + ")", i, j};
      }
    }
  }
  return {};
}

}  // namespace detail

/// Checks the sample invariants; reports the first violation with its (row, column).
inline ValidationResult validate_sample(const CurveSample& s) {
  if (auto g = detail::check_grid(s.grid.points()); !g) return g;
  if (!s.ids.empty() && s.ids.size() != s.n()) {
    return {false, ErrorCode::RaggedRows, "id count does not match curve count"};
  }
  return detail::check_matrix(s.values, s.grid.size());
}

inline ValidationResult validate_sample(const MultiCurveSample& s) {
  if (s.dims.empty()) return {false, ErrorCode::EmptyInput, "multivariate sample has no dimensions"};
  if (auto g = detail::check_grid(s.grid.points()); !g) return g;
  for (const auto& slice : s.dims) {
    if (slice.rows() != s.n()) return {false, ErrorCode::RaggedRows, "dimension slices differ in curve count"};
    if (auto r = detail::check_matrix(slice, s.grid.size()); !r) return r;
  }
  return {};
}

template <class Sample>
void require_valid(const Sample& s) {
  if (auto r = validate_sample(s); !r) throw Error(*r.code, r.message);
}

// ---------------------------------------------------------------------------
// RandomSource
//
// Generator: xoshiro256** (Blackman & Vigna), state seeded by four successive
// SplitMix64 outputs of the 64-bit seed. Uniforms take the top 53 bits.
// Normals use the Box–Muller transform; both variates of a pair are used, the
// second one is cached. Child streams are independent SplitMix64-derived seeds.
// ---------------------------------------------------------------------------

class RandomSource {
 public:
  static constexpr std::string_view algorithm = "xoshiro256**/splitmix64-seeded/box-muller";

  explicit RandomSource(std::uint64_t seed = 0) : seed_(seed) {
    std::uint64_t sm = seed;
    for (auto& s : state_) s = splitmix64(sm);
  }

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, bound), unbiased (rejection sampling).
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % bound;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  /// Independent stream for work item `index`; does not advance this source.
  RandomSource child(std::uint64_t index) const {
    std::uint64_t sm = seed_ ^ (0xD1B54A32D192ED03ULL * (index + 1));
    return RandomSource(splitmix64(sm));
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  static std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t state_[4]{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline std::vector<double> standard_normal(RandomSource& rng, std::size_t count) {
  std::vector<double> out(count);
  for (auto& x : out) x = rng.normal();
  return out;
}

// ---------------------------------------------------------------------------
// Threading
//
// Work is split into contiguous blocks; every index writes only its own
// output slot, so results never depend on the thread count.
// ---------------------------------------------------------------------------

namespace detail {
inline std::atomic<unsigned>& thread_setting() {
  static std::atomic<unsigned> n{1};
  return n;
}
}  // namespace detail

inline void set_thread_count(unsigned n) { detail::thread_setting() = std::max(1u, n); }
inline unsigned thread_count() { return detail::thread_setting().load(); }

template <class Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(thread_count(), count);
  if (workers <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t block = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * block;
    const std::size_t hi = std::min(count, lo + block);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

// ---------------------------------------------------------------------------
// Small shared numeric helpers
// ---------------------------------------------------------------------------

/// Linear-interpolation quantile (type 7) of already sorted data.
inline double quantile_sorted(std::span<const double> sorted, double prob) {
  if (sorted.empty()) throw Error(ErrorCode::EmptyInput, "quantile of empty data");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double quantile(std::vector<double> xs, double prob) {
  std::sort(xs.begin(), xs.end());
  return quantile_sorted(xs, prob);
}

inline double median_of(std::vector<double> xs) {
  if (xs.empty()) throw Error(ErrorCode::EmptyInput, "median of empty data");
  const std::size_t n = xs.size();
  const std::size_t mid = n / 2;
  std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid), xs.end());
  double med = xs[mid];
  if (n % 2 == 0) {
    const double lower = *std::max_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid));
    med = 0.5 * (med + lower);
  }
  return med;
}

/// Sorted, de-duplicated index list.
using IndexSet = std::vector<std::size_t>;

inline IndexSet normalize_set(IndexSet s) {
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

}  // namespace fdout
