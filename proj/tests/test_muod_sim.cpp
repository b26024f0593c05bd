#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "fdout/muod.hpp"
#include "fdout/simmodels.hpp"
#include "oracles.hpp"

using namespace fdout;

namespace {

bool contains(const IndexSet& s, std::size_t i) { return std::find(s.begin(), s.end(), i) != s.end(); }

}  // namespace

TEST(MuodIndices, ShiftedLinesFixture) {
  const Grid g = uniform_grid(6);
  Matrix m(3, 6);
  const double a[3] = {0, 0, 3};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t t = 0; t < 6; ++t) m(i, t) = a[i] + g[t];
  const auto idx = muod_indices(CurveSample(m, g));
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(idx.shape[i], 0.0, 1e-12);
    EXPECT_NEAR(idx.amplitude[i], 0.0, 1e-12);
  }
  EXPECT_NEAR(idx.magnitude[0], 1.0, 1e-12);
  EXPECT_NEAR(idx.magnitude[1], 1.0, 1e-12);
  EXPECT_NEAR(idx.magnitude[2], 2.0, 1e-12);
}

TEST(MuodIndices, IdenticalCurvesAreZero) {
  Matrix m(4, 5);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t t = 0; t < 5; ++t) m(i, t) = std::sin(static_cast<double>(t));
  const auto idx = muod_indices(CurveSample(m, uniform_grid(5)));
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(idx.shape[i], 0.0, 1e-12);
    EXPECT_NEAR(idx.amplitude[i], 0.0, 1e-12);
    EXPECT_NEAR(idx.magnitude[i], 0.0, 1e-12);
  }
}

TEST(MuodIndices, MatchesPairLoopOracle) {
  RandomSource rng(1);
  for (int rep = 0; rep < 30; ++rep) {
    CurveSample s = oracle::random_sample(rng, 3 + rng.below(10), 3 + rng.below(8), rep % 3 == 1);
    if (rep % 5 == 0)
      for (std::size_t t = 0; t < s.p(); ++t) s.values(0, t) = 2.0;
    bool any_var = false;
    for (std::size_t i = 0; i < s.n() && !any_var; ++i)
      for (std::size_t t = 1; t < s.p(); ++t) any_var = any_var || s.values(i, t) != s.values(i, 0);
    if (!any_var) continue;
    const auto fast = muod_indices(s);
    const auto slow = oracle::muod_indices(s);
    EXPECT_LE(oracle::max_abs_diff(fast.shape, slow.shape), 1e-12) << rep;
    EXPECT_LE(oracle::max_abs_diff(fast.magnitude, slow.magnitude), 1e-12) << rep;
    EXPECT_LE(oracle::max_abs_diff(fast.amplitude, slow.amplitude), 1e-12) << rep;
  }
}

TEST(MuodIndices, AffineTransformOfOneCurve) {
  RandomSource rng(2);
  const CurveSample s = oracle::random_sample(rng, 10, 8);
  CurveSample scaled = s, shifted = s;
  for (std::size_t t = 0; t < s.p(); ++t) {
    scaled.values(3, t) = 2.5 * s.values(3, t) + 1.0;
    shifted.values(3, t) = s.values(3, t) + 4.0;
  }
  const auto base = muod_indices(s);
  const auto a = muod_indices(scaled);
  EXPECT_NEAR(a.shape[3], base.shape[3], 1e-12);
  const auto b = muod_indices(shifted);
  EXPECT_LE(oracle::max_abs_diff(b.shape, base.shape), 1e-12);
  EXPECT_LE(oracle::max_abs_diff(b.amplitude, base.amplitude), 1e-12);
  EXPECT_GT(oracle::max_abs_diff(b.magnitude, base.magnitude), 0.1);
}

TEST(MuodIndices, ErrorsAndFlatCurves) {
  try {
    muod_indices(oracle::constant_curves({1, 2, 3}, 4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AllDegenerate);
  }
  EXPECT_THROW(muod_indices(oracle::constant_curves({1, 2}, 4)), Error);
  EXPECT_THROW(muod_indices(oracle::constant_curves({1, 2, 3}, 2)), Error);
}

TEST(MuodCutoff, BoxplotExamples) {
  std::vector<double> x(9, 0.1);
  x.push_back(5.0);
  EXPECT_EQ(muod_cutoff_boxplot(x), (IndexSet{9}));
  EXPECT_TRUE(muod_cutoff_boxplot(std::vector<double>(7, 2.0)).empty());
  std::vector<double> y;
  for (int k = 1; k <= 20; ++k) y.push_back(k);
  y.push_back(100);
  EXPECT_EQ(muod_cutoff_boxplot(y), (IndexSet{20}));
  EXPECT_THROW(muod_cutoff_boxplot({1, 2, 3, 4}), Error);
}

TEST(MuodCutoff, TangentExamples) {
  const std::size_t n = 50;
  std::vector<double> lin(n);
  for (std::size_t k = 0; k < n; ++k) lin[k] = static_cast<double>(k + 1) / n;
  const IndexSet all_but_min = muod_cutoff_tangent(lin);
  EXPECT_EQ(all_but_min.size(), n - 1);
  EXPECT_FALSE(contains(all_but_min, 0));

  std::vector<double> jump(100, 0.1);
  jump[10] = jump[50] = jump[90] = 10.0;
  EXPECT_EQ(muod_cutoff_tangent(jump), (IndexSet{10, 50, 90}));
  EXPECT_TRUE(muod_cutoff_tangent(std::vector<double>(20, 0.3)).empty());
  EXPECT_THROW(muod_cutoff_tangent(std::vector<double>(9, 1.0)), Error);
  EXPECT_EQ(parse_muod_cut("tangent"), MuodCut::Tangent);
  EXPECT_THROW(parse_muod_cut("knee"), Error);
}

TEST(Muod, PlantedMagnitudeAndAmplitudeOutliers) {
  int hits = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto sim = simulation_model(1, 100, 50, 0.1, true, seed);
    const auto r = muod(sim.data, MuodCut::Boxplot);
    hits += std::all_of(sim.true_outliers.begin(), sim.true_outliers.end(),
                        [&](std::size_t i) { return contains(r.outliers.magnitude, i); });
  }
  EXPECT_GE(hits, 18);

  auto sim = simulation_model(8, 60, 40, 0.0, true, 3);
  for (std::size_t i : {5u, 25u})
    for (std::size_t t = 0; t < sim.data.p(); ++t) sim.data.values(i, t) *= 3.0;
  const auto amp = muod(sim.data, MuodCut::Boxplot);
  EXPECT_TRUE(contains(amp.outliers.amplitude, 5));
  EXPECT_TRUE(contains(amp.outliers.amplitude, 25));
}

TEST(GaussianProcess, VanishingAmplitudeAndDeterminism) {
  const Grid g = uniform_grid(20);
  RandomSource rng(4);
  const CurveSample s = gp_sample({1e-16, 1.0, 1.0}, g, 5, rng, [](double t) { return 3.0 * t; });
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t t = 0; t < 20; ++t) EXPECT_NEAR(s.values(i, t), 3.0 * g[t], 1e-6);
  RandomSource a(5), b(5);
  EXPECT_EQ(gp_sample({}, g, 4, a), gp_sample({}, g, 4, b));
  EXPECT_THROW(gp_sample({-1.0, 1.0, 1.0}, g, 3, a), Error);
}

TEST(GaussianProcess, EmpiricalCovarianceMatchesKernel) {
  const Grid g = uniform_grid(11);
  const GaussianProcessSpec spec{2.0, 1.5, 1.0};
  RandomSource rng(6);
  const CurveSample s = gp_sample(spec, g, 10000, rng);
  const std::size_t a = 2, b = 7;
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < s.n(); ++i) {
    ma += s.values(i, a);
    mb += s.values(i, b);
  }
  ma /= s.n();
  mb /= s.n();
  double caa = 0, cab = 0;
  for (std::size_t i = 0; i < s.n(); ++i) {
    caa += (s.values(i, a) - ma) * (s.values(i, a) - ma);
    cab += (s.values(i, a) - ma) * (s.values(i, b) - mb);
  }
  caa /= (s.n() - 1.0);
  cab /= (s.n() - 1.0);
  EXPECT_NEAR(caa / spec.alpha, 1.0, 0.05);
  const double gamma = spec.alpha * std::exp(-spec.beta * std::abs(g[a] - g[b]));
  EXPECT_NEAR(cab / gamma, 1.0, 0.05);
}

TEST(Simulation, ShapesRatesAndErrors) {
  for (int model = 1; model <= 9; ++model) {
    const auto sim = simulation_model(model, 40, 30, 0.2, false, 7);
    EXPECT_EQ(sim.data.n(), 40u);
    EXPECT_EQ(sim.data.p(), 30u);
    EXPECT_TRUE(std::is_sorted(sim.true_outliers.begin(), sim.true_outliers.end()));
    for (auto i : sim.true_outliers) EXPECT_LT(i, 40u);
    EXPECT_TRUE(validate_sample(sim.data).ok);
  }
  EXPECT_TRUE(simulation_model(3, 50, 20, 0.0, false, 8).true_outliers.empty());
  EXPECT_EQ(simulation_model(1, 100, 50, 0.1, true, 9).true_outliers.size(), 10u);
  const auto x = simulation_model(1, 30, 10, 0.1, false, 10);
  const auto y = simulation_model(1, 30, 10, 0.1, false, 10);
  EXPECT_EQ(x.data, y.data);
  EXPECT_EQ(x.true_outliers, y.true_outliers);
  try {
    simulation_model(1, 10, 10, 1.5, false, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadRate);
  }
  try {
    simulation_model(10, 10, 10, 0.1, false, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadModel);
  }
}

TEST(Simulation, BernoulliCountIsBinomial) {
  double total = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed)
    total += static_cast<double>(simulation_model(1, 100, 5, 0.1, false, seed).true_outliers.size());
  // Mean of 200 Binomial(100, 0.1) draws: sd of the mean is 0.21.
  EXPECT_NEAR(total / 200.0, 10.0, 1.0);
}

TEST(Simulation, MagnitudeShiftIsEight) {
  double total = 0;
  std::size_t planted = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto sim = simulation_model(1, 100, 50, 0.1, true, seed);
    std::vector<double> gm(sim.data.n());
    double bulk = 0;
    std::size_t nb = 0;
    for (std::size_t i = 0; i < sim.data.n(); ++i) {
      for (double v : sim.data.values.row(i)) gm[i] += v / sim.data.p();
      if (!contains(sim.true_outliers, i)) {
        bulk += gm[i];
        ++nb;
      }
    }
    bulk /= nb;
    for (auto i : sim.true_outliers) {
      total += std::abs(gm[i] - bulk);
      ++planted;
    }
  }
  ASSERT_GT(planted, 0u);
  EXPECT_NEAR(total / planted, 8.0, 0.5);
}

TEST(Simulation, BulkMeanRecoversLinearTrend) {
  const std::size_t reps = 20, n = 100, p = 25;
  std::vector<double> mean(p, 0.0);
  std::size_t count = 0;
  for (std::uint64_t seed = 1; seed <= reps; ++seed) {
    const auto sim = simulation_model(6, n, p, 0.1, false, seed);
    for (std::size_t i = 0; i < n; ++i) {
      if (contains(sim.true_outliers, i)) continue;
      ++count;
      for (std::size_t t = 0; t < p; ++t) mean[t] += sim.data.values(i, t);
    }
  }
  const Grid g = uniform_grid(p);
  const double se = 1.0 / std::sqrt(static_cast<double>(count));
  for (std::size_t t = 0; t < p; ++t) EXPECT_NEAR(mean[t] / count, 4.0 * g[t], 3.0 * se) << t;
}
