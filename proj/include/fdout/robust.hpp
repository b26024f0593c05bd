#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <tuple>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>

#include "fdout/core.hpp"

namespace fdout {

inline constexpr double kMadConsistency = 1.4826;

struct RobustLocationScale {
  double median = 0.0;
  double mad = 0.0;  // scaled by kMadConsistency
};

inline RobustLocationScale median_mad(std::span<const double> xs) {
  if (xs.empty()) throw Error(ErrorCode::EmptyInput, "median_mad of an empty sequence");
  std::vector<double> v(xs.begin(), xs.end());
  const double med = median_of(v);
  for (auto& x : v) x = std::abs(x - med);
  return {med, kMadConsistency * median_of(std::move(v))};
}

/// Outlyingness |x - median| / mad with the MAD-zero convention: 0 when the
/// deviation is also 0, +infinity otherwise.
inline double sdo_ratio(double deviation, double mad) {
  deviation = std::abs(deviation);
  if (mad > 0.0) return deviation / mad;
  return deviation == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// Geometric (spatial) median
// ---------------------------------------------------------------------------

struct GeometricMedianOptions {
  double tol = 1e-10;
  int max_iter = 1000;
};

/// Weiszfeld iteration with the Vardi–Zhang step when the iterate lands on a
/// data point. `points` is m×d.
inline std::vector<double> geometric_median(const Matrix& points, GeometricMedianOptions opts = {}) {
  const std::size_t m = points.rows();
  const std::size_t d = points.cols();
  if (m == 0 || d == 0) throw Error(ErrorCode::EmptyInput, "geometric_median of an empty point set");
  using Vec = Eigen::VectorXd;
  auto pt = [&](std::size_t i) { return Eigen::Map<const Vec>(points.row(i).data(), static_cast<Eigen::Index>(d)); };

  Vec y = Vec::Zero(static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < m; ++i) y += pt(i);
  y /= static_cast<double>(m);

  double spread = 0.0;
  for (std::size_t i = 0; i < m; ++i) spread += (pt(i) - y).norm();
  spread /= static_cast<double>(m);
  if (spread == 0.0) return {y.data(), y.data() + d};
  const double coincide = 1e-14 * spread;

  // A data point x_k is the median iff |sum_{x_i != x_k} unit(x_i - x_k)| <= #{x_i == x_k}.
  auto is_median_at = [&](std::size_t k) {
    Vec pull = Vec::Zero(static_cast<Eigen::Index>(d));
    double multiplicity = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const Vec diff = pt(i) - pt(k);
      const double dist = diff.norm();
      if (dist <= coincide) {
        multiplicity += 1.0;
      } else {
        pull += diff / dist;
      }
    }
    return pull.norm() <= multiplicity;
  };

  auto total_distance = [&](const Vec& c) {
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) sum += (pt(i) - c).norm();
    return sum;
  };

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    std::size_t nearest = 0;
    double nearest_dist = std::numeric_limits<double>::infinity();
    Vec num = Vec::Zero(static_cast<Eigen::Index>(d));
    Vec pull = Vec::Zero(static_cast<Eigen::Index>(d));
    Eigen::MatrixXd hessian = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    double denom = 0.0;
    double multiplicity = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const Vec diff = pt(i) - y;
      const double dist = diff.norm();
      if (dist < nearest_dist) {
        nearest_dist = dist;
        nearest = i;
      }
      if (dist <= coincide) {
        multiplicity += 1.0;
        continue;
      }
      const Vec u = diff / dist;
      num += pt(i) / dist;
      pull += u;
      denom += 1.0 / dist;
      hessian.noalias() += (Eigen::MatrixXd::Identity(u.size(), u.size()) - u * u.transpose()) / dist;
    }
    if (denom == 0.0) break;  // every point coincides with y
    // Weiszfeld only creeps towards a median that sits on a data point.
    if (multiplicity == 0.0 && is_median_at(nearest)) {
      const Vec x = pt(nearest);
      return {x.data(), x.data() + d};
    }
    Vec next = num / denom;
    if (multiplicity > 0.0) {
      const double r = pull.norm();
      if (r <= multiplicity) break;  // y is the median
      const double w = multiplicity / r;
      next = (1.0 - w) * next + w * y;
    } else {
      // Newton step on the smooth objective, kept only if it beats the Weiszfeld step.
      const Eigen::LDLT<Eigen::MatrixXd> ldlt(hessian);
      if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
        const Vec newton = y + ldlt.solve(pull);
        if (newton.allFinite() && total_distance(newton) < total_distance(next)) next = newton;
      }
    }
    const double step = (next - y).norm();
    y = next;
    if (step <= opts.tol * std::max(y.norm(), spread)) return {y.data(), y.data() + d};
  }
  // Reaching here through a break means an exact stop at a data point.
  Vec check = Vec::Zero(static_cast<Eigen::Index>(d));
  double multiplicity = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const Vec diff = pt(i) - y;
    const double dist = diff.norm();
    if (dist <= coincide) {
      multiplicity += 1.0;
    } else {
      check += diff / dist;
    }
  }
  if (check.norm() <= multiplicity + 1e-12) return {y.data(), y.data() + d};
  throw Error(ErrorCode::NonConvergence, "Weiszfeld iteration did not converge in " +
                                             std::to_string(opts.max_iter) + " iterations");
}

// ---------------------------------------------------------------------------
// Minimum covariance determinant (FastMCD)
// ---------------------------------------------------------------------------

struct McdFit {
  std::vector<double> center;
  Eigen::MatrixXd covariance;
  IndexSet subset_indices;  // the optimal h-subset, sorted
  double coverage_fraction = 0.0;
  bool consistency_corrected = true;
  double consistency_factor = 1.0;
  double log_det_raw = 0.0;
};

struct McdOptions {
  std::optional<double> coverage;  // unset: h = floor((m + d + 1) / 2)
  int n_starts = 500;
  int initial_csteps = 2;
  int n_best = 10;
  int max_csteps = 200;
};

namespace detail {

struct SubsetStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  double log_det = 0.0;
  bool singular = true;
};

inline Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j);
  return out;
}

inline SubsetStats subset_stats(const Eigen::MatrixXd& x, const IndexSet& idx) {
  const auto d = x.cols();
  SubsetStats s;
  s.mean = Eigen::VectorXd::Zero(d);
  for (auto i : idx) s.mean += x.row(static_cast<Eigen::Index>(i)).transpose();
  s.mean /= static_cast<double>(idx.size());
  s.cov = Eigen::MatrixXd::Zero(d, d);
  for (auto i : idx) {
    const Eigen::VectorXd c = x.row(static_cast<Eigen::Index>(i)).transpose() - s.mean;
    s.cov.noalias() += c * c.transpose();
  }
  s.cov /= static_cast<double>(idx.size() > 1 ? idx.size() - 1 : 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s.cov, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  const double top = ev.maxCoeff();
  s.singular = !(top > 0.0) || ev.minCoeff() <= 1e-12 * top;
  if (!s.singular) s.log_det = ev.array().log().sum();
  return s;
}

// Indices of the h smallest squared distances (ties broken by index).
inline IndexSet closest_h(const Eigen::MatrixXd& x, const SubsetStats& s, std::size_t h) {
  const auto m = static_cast<std::size_t>(x.rows());
  const Eigen::LLT<Eigen::MatrixXd> llt(s.cov);
  std::vector<double> dist(m);
  for (std::size_t i = 0; i < m; ++i) {
    const Eigen::VectorXd c = x.row(static_cast<Eigen::Index>(i)).transpose() - s.mean;
    dist[i] = c.dot(llt.solve(c));
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(h), order.end(),
                    [&](std::size_t a, std::size_t b) { return dist[a] < dist[b] || (dist[a] == dist[b] && a < b); });
  IndexSet out(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(h));
  std::sort(out.begin(), out.end());
  return out;
}

struct Candidate {
  IndexSet subset;
  SubsetStats stats;
};

inline std::optional<Candidate> run_start(const Eigen::MatrixXd& x, std::size_t h, int csteps, RandomSource rng) {
  const auto m = static_cast<std::size_t>(x.rows());
  const auto d = static_cast<std::size_t>(x.cols());
  // Random (d+1)-subset, grown one point at a time while singular.
  std::vector<std::size_t> pool(m);
  std::iota(pool.begin(), pool.end(), 0);
  std::size_t taken = 0;
  auto draw = [&] {
    const auto k = taken + static_cast<std::size_t>(rng.below(m - taken));
    std::swap(pool[taken], pool[k]);
    ++taken;
  };
  for (std::size_t k = 0; k < d + 1; ++k) draw();
  SubsetStats s = subset_stats(x, IndexSet(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(taken)));
  while (s.singular && taken < m) {
    draw();
    s = subset_stats(x, IndexSet(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(taken)));
  }
  if (s.singular) return std::nullopt;

  Candidate c;
  c.stats = s;
  for (int step = 0; step < csteps; ++step) {
    IndexSet next = closest_h(x, c.stats, h);
    SubsetStats ns = subset_stats(x, next);
    if (ns.singular) return std::nullopt;
    c.subset = std::move(next);
    c.stats = std::move(ns);
  }
  return c;
}

}  // namespace detail

/// Coverage h for m points in d dimensions.
inline std::size_t mcd_subset_size(std::size_t m, std::size_t d, std::optional<double> coverage) {
  const std::size_t hmin = (m + d + 1) / 2;
  if (!coverage) return std::min(hmin, m);
  return std::clamp(static_cast<std::size_t>(std::ceil(*coverage * static_cast<double>(m) - 1e-9)), hmin, m);
}

/// Consistency factor for the raw MCD scatter at the normal model:
/// (h/m) / P(chi2_{d+2} <= chi2_{d, h/m}).
inline double mcd_consistency_factor(std::size_t m, std::size_t d, std::size_t h) {
  const double frac = static_cast<double>(h) / static_cast<double>(m);
  if (frac >= 1.0) return 1.0;
  const boost::math::chi_squared_distribution<double> chi_d(static_cast<double>(d));
  const boost::math::chi_squared_distribution<double> chi_d2(static_cast<double>(d + 2));
  const double q = boost::math::quantile(chi_d, frac);
  return frac / boost::math::cdf(chi_d2, q);
}

/// FastMCD: random elemental starts, a couple of concentration steps each, then
/// the best few are iterated to convergence. Starts use child streams of `rng`
/// so the fit is independent of the thread count.
inline McdFit fast_mcd(const Matrix& points, RandomSource& rng, McdOptions opts = {}) {
  const std::size_t m = points.rows();
  const std::size_t d = points.cols();
  if (d == 0 || m <= 2 * d) {
    throw Error(ErrorCode::TooFewPoints, "fast_mcd needs more than 2d points (m = " + std::to_string(m) +
                                             ", d = " + std::to_string(d) + ")");
  }
  if (opts.coverage && !(*opts.coverage >= 0.5 && *opts.coverage <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "MCD coverage must lie in [0.5, 1]");
  }
  const Eigen::MatrixXd x = detail::to_eigen(points);
  const std::size_t h = mcd_subset_size(m, d, opts.coverage);

  detail::Candidate best;
  if (h == m) {
    best.subset.resize(m);
    std::iota(best.subset.begin(), best.subset.end(), 0);
    best.stats = detail::subset_stats(x, best.subset);
    if (best.stats.singular) throw Error(ErrorCode::SingularSubsets, "sample covariance is singular");
  } else {
    const RandomSource base(rng.next_u64());
    std::vector<std::optional<detail::Candidate>> starts(static_cast<std::size_t>(opts.n_starts));
    parallel_for(starts.size(), [&](std::size_t k) {
      starts[k] = detail::run_start(x, h, opts.initial_csteps, base.child(k));
    });

    std::vector<detail::Candidate> pool;
    for (auto& s : starts)
      if (s) pool.push_back(std::move(*s));
    if (pool.empty()) {
      throw Error(ErrorCode::SingularSubsets, "every candidate subset has a singular covariance");
    }
    std::stable_sort(pool.begin(), pool.end(),
                     [](const auto& a, const auto& b) { return a.stats.log_det < b.stats.log_det; });
    // Drop duplicate subsets among the leaders before refining.
    std::vector<detail::Candidate> leaders;
    for (auto& c : pool) {
      if (leaders.size() >= static_cast<std::size_t>(opts.n_best)) break;
      const bool dup = std::any_of(leaders.begin(), leaders.end(), [&](const auto& l) { return l.subset == c.subset; });
      if (!dup) leaders.push_back(std::move(c));
    }

    bool have_best = false;
    for (auto& c : leaders) {
      for (int step = 0; step < opts.max_csteps; ++step) {
        IndexSet next = detail::closest_h(x, c.stats, h);
        if (next == c.subset) break;
        detail::SubsetStats ns = detail::subset_stats(x, next);
        if (ns.singular || ns.log_det >= c.stats.log_det) break;
        c.subset = std::move(next);
        c.stats = std::move(ns);
      }
      if (!have_best || c.stats.log_det < best.stats.log_det) {
        best = c;
        have_best = true;
      }
    }
  }

  McdFit fit;
  fit.center.assign(best.stats.mean.data(), best.stats.mean.data() + d);
  fit.consistency_factor = mcd_consistency_factor(m, d, h);
  fit.covariance = best.stats.cov * fit.consistency_factor;
  fit.subset_indices = best.subset;
  fit.coverage_fraction = static_cast<double>(h) / static_cast<double>(m);
  fit.consistency_corrected = true;
  fit.log_det_raw = best.stats.log_det;
  return fit;
}

/// Squared Mahalanobis distances of every row of `points` under (center, covariance).
/// The covariance diagonal is lifted by 1e-12 * trace / d before factorization.
inline std::vector<double> robust_distances(const Matrix& points, const std::vector<double>& center,
                                            const Eigen::MatrixXd& covariance) {
  const std::size_t d = points.cols();
  if (center.size() != d || static_cast<std::size_t>(covariance.rows()) != d ||
      static_cast<std::size_t>(covariance.cols()) != d) {
    throw Error(ErrorCode::InvalidArgument, "robust_distances: dimension mismatch");
  }
  Eigen::MatrixXd cov = covariance;
  const double lift = 1e-12 * cov.trace() / static_cast<double>(d);
  cov.diagonal().array() += lift;
  const Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularCovariance, "covariance is not positive definite after regularization");
  }
  const Eigen::Map<const Eigen::VectorXd> mu(center.data(), static_cast<Eigen::Index>(d));
  std::vector<double> out(points.rows());
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const Eigen::Map<const Eigen::VectorXd> xi(points.row(i).data(), static_cast<Eigen::Index>(d));
    const Eigen::VectorXd z = llt.matrixL().solve(xi - mu);
    out[i] = z.squaredNorm();
  }
  return out;
}

inline std::vector<double> robust_distances(const Matrix& points, const McdFit& fit) {
  return robust_distances(points, fit.center, fit.covariance);
}

// ---------------------------------------------------------------------------
// Hardin–Rocke F approximation
// ---------------------------------------------------------------------------

struct FCutoff {
  double level = 0.05;
  double dof1 = 0.0;
  double dof2 = 0.0;
  double scale = 0.0;
  double threshold = 0.0;
  double m_asymptotic = 0.0;  // Croux–Haesbroeck Wishart degrees of freedom
  double m_adjusted = 0.0;    // after the small-sample adjustment
};

/// Degrees of freedom of the Wishart approximation to the raw MCD scatter,
/// from its asymptotic variance at the normal (Croux & Haesbroeck 1999), and
/// the small-sample adjustment exp(0.725 - 0.00663 d - 0.0780 log m).
inline std::pair<double, double> hardin_rocke_dof(std::size_t m, std::size_t d, std::size_t h) {
  const double p = static_cast<double>(d);
  const double retained = static_cast<double>(h) / static_cast<double>(m);
  const double trimmed = 1.0 - retained;
  const boost::math::chi_squared_distribution<double> chi_p(p), chi_p2(p + 2.0), chi_p4(p + 4.0);
  const double q = boost::math::quantile(chi_p, retained);
  const double c = retained / boost::math::cdf(chi_p2, q);
  const double c2 = -0.5 * boost::math::cdf(chi_p2, q);
  const double c3 = -0.5 * boost::math::cdf(chi_p4, q);
  const double c4 = 3.0 * c3;
  const double b1 = c * (c3 - c4) / retained;
  const double b2 = 0.5 + c / retained * (c3 - q / p * (c2 + retained / 2.0));
  const double v1 = retained * b1 * b1 * (trimmed * std::pow(c * q / p - 1.0, 2) - 1.0) -
                    2.0 * c3 * c * c * (3.0 * std::pow(b1 - p * b2, 2) + (p + 2.0) * b2 * (2.0 * b1 - p * b2));
  const double v2 = static_cast<double>(m) * std::pow(b1 * (b1 - p * b2) * retained, 2) * c * c;
  const double v = v1 / v2;
  const double m_asy = 2.0 / (c * c * v);
  const double m_adj = m_asy * std::exp(0.725 - 0.00663 * p - 0.0780 * std::log(static_cast<double>(m)));
  return {m_asy, m_adj};
}

/// Cutoff for consistency-corrected squared MCD distances:
/// d * M / (M - d + 1) * F_{1-level}(d, M - d + 1).
inline FCutoff hardin_rocke_cutoff(std::size_t m, std::size_t d, std::optional<double> coverage = std::nullopt,
                                   double level = 0.05) {
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::InvalidLevel, "level must lie in (0, 1)");
  if (d == 0 || m <= d + 1) throw Error(ErrorCode::TooFewPoints, "hardin_rocke_cutoff needs m > d + 1");
  const std::size_t h = mcd_subset_size(m, d, coverage);
  FCutoff cut;
  cut.level = level;
  if (h >= m) {
    // No trimming: the Wishart approximation degenerates to the classical one.
    cut.m_asymptotic = cut.m_adjusted = static_cast<double>(m - 1);
  } else {
    std::tie(cut.m_asymptotic, cut.m_adjusted) = hardin_rocke_dof(m, d, h);
  }
  const double p = static_cast<double>(d);
  const double M = std::max(cut.m_adjusted, p + 1.0);
  cut.dof1 = p;
  cut.dof2 = M - p + 1.0;
  cut.scale = p * M / cut.dof2;
  const boost::math::fisher_f_distribution<double> f(cut.dof1, cut.dof2);
  cut.threshold = cut.scale * boost::math::quantile(f, 1.0 - level);
  return cut;
}

}  // namespace fdout
