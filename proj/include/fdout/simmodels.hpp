#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "fdout/core.hpp"

namespace fdout {

/// Zero-mean Gaussian process with covariance alpha * exp(-beta |s - t|^nu).
struct GaussianProcessSpec {
  double alpha = 1.0;
  double beta = 1.0;
  double nu = 1.0;
};

namespace detail {

inline void check_gp(const GaussianProcessSpec& s) {
  if (!(s.alpha > 0.0) || !(s.beta > 0.0) || !(s.nu > 0.0 && s.nu <= 2.0) || !std::isfinite(s.alpha) ||
      !std::isfinite(s.beta)) {
    throw Error(ErrorCode::InvalidArgument, "Gaussian process needs alpha > 0, beta > 0, 0 < nu <= 2");
  }
}

}  // namespace detail

/// Lower Cholesky factor of the covariance on `grid`; one retry with 1e-10 diagonal jitter.
inline Eigen::MatrixXd gp_cholesky(const GaussianProcessSpec& spec, const Grid& grid) {
  detail::check_gp(spec);
  const auto p = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd cov(p, p);
  for (Eigen::Index a = 0; a < p; ++a)
    for (Eigen::Index b = 0; b < p; ++b)
      cov(a, b) = spec.alpha * std::exp(-spec.beta * std::pow(std::abs(grid[static_cast<std::size_t>(a)] -
                                                                       grid[static_cast<std::size_t>(b)]),
                                                              spec.nu));
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    cov.diagonal().array() += 1e-10;
    llt.compute(cov);
    if (llt.info() != Eigen::Success) throw Error(ErrorCode::CovarianceNotPD, "GP covariance is not positive definite");
  }
  return llt.matrixL();
}

/// One path of the process (without mean) from a precomputed factor.
inline std::vector<double> gp_path(const Eigen::MatrixXd& chol, RandomSource& rng) {
  const auto p = chol.rows();
  Eigen::VectorXd z(p);
  for (Eigen::Index k = 0; k < p; ++k) z(k) = rng.normal();
  const Eigen::VectorXd x = chol.triangularView<Eigen::Lower>() * z;
  return std::vector<double>(x.data(), x.data() + p);
}

/// n paths mean(t) + L z.
template <class MeanFn>
CurveSample gp_sample(const GaussianProcessSpec& spec, const Grid& grid, std::size_t n, RandomSource& rng,
                      MeanFn mean) {
  if (n < 1) throw Error(ErrorCode::TooFewCurves, "gp_sample needs n >= 1");
  const Eigen::MatrixXd chol = gp_cholesky(spec, grid);
  Matrix values(n, grid.size());
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double> e = gp_path(chol, rng);
    for (std::size_t t = 0; t < grid.size(); ++t) values(i, t) = mean(grid[t]) + e[t];
  }
  return CurveSample(std::move(values), grid);
}

inline CurveSample gp_sample(const GaussianProcessSpec& spec, const Grid& grid, std::size_t n, RandomSource& rng) {
  return gp_sample(spec, grid, n, rng, [](double) { return 0.0; });
}

struct SimulationParams {
  int model = 1;
  std::size_t n = 100;
  std::size_t p = 50;
  double outlier_rate = 0.1;
  bool deterministic = false;
  std::uint64_t seed = 1;
  // overrides
  double shift = 8.0;                                    // models 1-3
  GaussianProcessSpec base_noise{};                      // all models
  GaussianProcessSpec outlier_noise{8.0, 2.0, 0.5};      // model 5
  double spike_length = 0.04;                            // model 2
  double oscillation_length = 0.2;                       // model 9
  double phase_shift = 0.15;                             // model 7
};

struct SimulationOutput {
  CurveSample data;
  IndexSet true_outliers;
  int model_id = 1;
  SimulationParams params;
};

/// Rows chosen for contamination: Bernoulli(rate) per row, or exactly
/// ceil(n * rate) rows at floor((k + 0.5) n / m).
inline IndexSet contaminated_rows(std::size_t n, double rate, bool deterministic, RandomSource& rng) {
  IndexSet rows;
  if (deterministic) {
    const auto m = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * rate - 1e-12));
    for (std::size_t k = 0; k < m; ++k) {
      rows.push_back(static_cast<std::size_t>(std::floor((static_cast<double>(k) + 0.5) * static_cast<double>(n) /
                                                         static_cast<double>(m))));
    }
  } else {
    for (std::size_t i = 0; i < n; ++i)
      if (rng.uniform() < rate) rows.push_back(i);
  }
  return rows;
}

/// Draws one of the nine contamination models on a uniform grid over [0, 1].
inline SimulationOutput simulation_model(const SimulationParams& params) {
  if (params.model < 1 || params.model > 9) throw Error(ErrorCode::BadModel, "model must be 1..9");
  if (!(params.outlier_rate >= 0.0 && params.outlier_rate <= 1.0)) {
    throw Error(ErrorCode::BadRate, "outlier rate must lie in [0, 1]");
  }
  if (params.n < 1) throw Error(ErrorCode::TooFewCurves, "n must be positive");
  const std::size_t n = params.n;
  const std::size_t p = params.p;
  const Grid grid = uniform_grid(p);
  RandomSource rng(params.seed);

  SimulationOutput out;
  out.model_id = params.model;
  out.params = params;
  out.true_outliers = contaminated_rows(n, params.outlier_rate, params.deterministic, rng);

  const Eigen::MatrixXd chol = gp_cholesky(params.base_noise, grid);
  std::vector<std::vector<double>> noise(n);
  for (auto& e : noise) e = gp_path(chol, rng);

  constexpr double pi = std::numbers::pi;
  const bool periodic = params.model == 7 || params.model == 8;
  Matrix values(n, p);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t t = 0; t < p; ++t)
      values(i, t) = (periodic ? 4.0 * std::sin(2.0 * pi * grid[t]) : 4.0 * grid[t]) + noise[i][t];

  std::optional<Eigen::MatrixXd> rough;
  if (params.model == 5) rough = gp_cholesky(params.outlier_noise, grid);

  for (std::size_t i : out.true_outliers) {
    auto row = values.row(i);
    auto sign = [&] { return rng.uniform() < 0.5 ? -1.0 : 1.0; };
    switch (params.model) {
      case 1: {
        const double k = sign();
        for (auto& v : row) v += params.shift * k;
        break;
      }
      case 2: {
        const double k = sign();
        const double start = rng.uniform(0.0, 1.0 - params.spike_length);
        for (std::size_t t = 0; t < p; ++t)
          if (grid[t] >= start && grid[t] <= start + params.spike_length) row[t] += params.shift * k;
        break;
      }
      case 3: {
        const double k = sign();
        const double onset = rng.uniform(0.2, 0.8);
        for (std::size_t t = 0; t < p; ++t)
          if (grid[t] >= onset) row[t] += params.shift * k;
        break;
      }
      case 4:
        for (std::size_t t = 0; t < p; ++t) row[t] = 4.0 * (1.0 - grid[t]) + noise[i][t];
        break;
      case 5: {
        const std::vector<double> e = gp_path(*rough, rng);
        for (std::size_t t = 0; t < p; ++t) row[t] = 4.0 * grid[t] + e[t];
        break;
      }
      case 6:
        for (std::size_t t = 0; t < p; ++t) row[t] += 2.0 * std::sin(4.0 * pi * grid[t]);
        break;
      case 7: {
        const double k = sign();
        for (std::size_t t = 0; t < p; ++t)
          row[t] = 4.0 * std::sin(2.0 * pi * (grid[t] + k * params.phase_shift)) + noise[i][t];
        break;
      }
      case 8: {
        const double theta = rng.uniform(1.5, 2.0);
        for (std::size_t t = 0; t < p; ++t) row[t] = 4.0 * theta * std::sin(2.0 * pi * grid[t]) + noise[i][t];
        break;
      }
      case 9: {
        const double start = rng.uniform(0.0, 1.0 - params.oscillation_length);
        for (std::size_t t = 0; t < p; ++t)
          if (grid[t] >= start && grid[t] <= start + params.oscillation_length)
            row[t] += 2.0 * std::sin(40.0 * pi * grid[t]);
        break;
      }
      default: break;
    }
  }
  out.data = CurveSample(std::move(values), grid);
  return out;
}

inline SimulationOutput simulation_model(int model, std::size_t n, std::size_t p, double rate, bool deterministic,
                                         std::uint64_t seed) {
  SimulationParams params;
  params.model = model;
  params.n = n;
  params.p = p;
  params.outlier_rate = rate;
  params.deterministic = deterministic;
  params.seed = seed;
  return simulation_model(params);
}

}  // namespace fdout
