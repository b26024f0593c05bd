#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fdout/detect.hpp"
#include "fdout/simmodels.hpp"
#include "oracles.hpp"

using namespace fdout;

namespace {

bool contains(const IndexSet& s, std::size_t i) { return std::find(s.begin(), s.end(), i) != s.end(); }

CurveSample from_functions(const std::vector<double (*)(double)>& fs, std::size_t p) {
  const Grid g = uniform_grid(p);
  Matrix m(fs.size(), p);
  for (std::size_t i = 0; i < fs.size(); ++i)
    for (std::size_t t = 0; t < p; ++t) m(i, t) = fs[i](g[t]);
  return CurveSample(m, g);
}

CurveSample permute_rows(const CurveSample& s, const std::vector<std::size_t>& order) {
  CurveSample out = s;
  for (std::size_t i = 0; i < s.n(); ++i)
    for (std::size_t t = 0; t < s.p(); ++t) out.values(i, t) = s.values(order[i], t);
  return out;
}

}  // namespace

TEST(FunctionalBoxplot, ConstantCurveFixture) {
  const CurveSample s = oracle::constant_curves({0, 1, 2, 3, 10}, 4);
  const auto fb = functional_boxplot(s, modified_band_depth(s));
  EXPECT_EQ(fb.central_indices.size(), 3u);
  for (std::size_t t = 0; t < 4; ++t) {
    EXPECT_DOUBLE_EQ(fb.envelope_lower[t], 1.0);
    EXPECT_DOUBLE_EQ(fb.envelope_upper[t], 3.0);
    EXPECT_DOUBLE_EQ(fb.fence_lower[t], -2.0);
    EXPECT_DOUBLE_EQ(fb.fence_upper[t], 6.0);
  }
  EXPECT_EQ(fb.outliers, (IndexSet{4}));
}

TEST(FunctionalBoxplot, DegenerateAndInfiniteFences) {
  const CurveSample same = oracle::constant_curves({2, 2, 2, 2}, 5);
  EXPECT_TRUE(functional_boxplot(same, modified_band_depth(same)).outliers.empty());
  const CurveSample s = oracle::constant_curves({0, 1, 2, 3, 1e6}, 4);
  EXPECT_TRUE(functional_boxplot(s, modified_band_depth(s), 0.5, std::numeric_limits<double>::infinity())
                  .outliers.empty());
  for (double cr : {0.0, 1.0, -0.2}) {
    try {
      functional_boxplot(s, modified_band_depth(s), cr);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::BadCentralRegion);
    }
  }
}

TEST(FunctionalBoxplot, OutlyingIsLargerDepthIsNegated) {
  const CurveSample s = oracle::constant_curves({0, 1, 2, 3, 10}, 4);
  DepthVector dv{{4.0, 1.0, 0.0, 1.0, 9.0}, Direction::OutlyingIsLarger, "custom"};
  EXPECT_EQ(functional_boxplot(s, dv).outliers, (IndexSet{4}));
}

TEST(FunctionalBoxplot, PermutationEquivariant) {
  RandomSource rng(1);
  CurveSample s = oracle::random_sample(rng, 12, 9);
  for (std::size_t t = 0; t < 9; ++t) s.values(5, t) += 6.0;
  const IndexSet base = functional_boxplot(s, modified_band_depth(s)).outliers;
  ASSERT_FALSE(base.empty());
  const std::vector<std::size_t> order{11, 3, 5, 0, 7, 1, 9, 2, 10, 4, 8, 6};
  const CurveSample perm = permute_rows(s, order);
  IndexSet mapped;
  for (auto i : functional_boxplot(perm, modified_band_depth(perm)).outliers) mapped.push_back(order[i]);
  std::sort(mapped.begin(), mapped.end());
  EXPECT_EQ(mapped, base);
}

TEST(Tvdmss, ConstantCurvesMagnitudeOnly) {
  const CurveSample s = oracle::constant_curves({0, 1, 2, 3, 10}, 6);
  const auto r = tvdmss(s);
  EXPECT_TRUE(r.shape_outliers.empty());
  EXPECT_EQ(r.magnitude_outliers, (IndexSet{4}));
  EXPECT_EQ(r.outliers, (IndexSet{4}));
}

TEST(Tvdmss, OscillatingCurveIsShapeOutlier) {
  const std::size_t n = 30, p = 50;
  RandomSource rng(2);
  const Grid g = uniform_grid(p);
  Matrix m(n, p);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = rng.normal();
    for (std::size_t t = 0; t < p; ++t) m(i, t) = a + 4.0 * g[t] + 0.05 * rng.normal();
  }
  for (std::size_t t = 0; t < p; ++t) m(7, t) = 2.0 + ((t % 2 == 0) ? 1.5 : -1.5);
  const auto r = tvdmss(CurveSample(m, g));
  EXPECT_NE(std::find(r.shape_outliers.begin(), r.shape_outliers.end(), 7u), r.shape_outliers.end());
  EXPECT_EQ(std::min_element(r.mss.begin(), r.mss.end()) - r.mss.begin(), 7);
}

TEST(Tvdmss, SetsAreDisjointAndLargeFactorsFlagNothing) {
  const auto sim = simulation_model(1, 60, 30, 0.1, true, 3);
  const auto r = tvdmss(sim.data);
  IndexSet both;
  std::set_intersection(r.shape_outliers.begin(), r.shape_outliers.end(), r.magnitude_outliers.begin(),
                        r.magnitude_outliers.end(), std::back_inserter(both));
  EXPECT_TRUE(both.empty());
  IndexSet uni;
  std::set_union(r.shape_outliers.begin(), r.shape_outliers.end(), r.magnitude_outliers.begin(),
                 r.magnitude_outliers.end(), std::back_inserter(uni));
  EXPECT_EQ(uni, r.outliers);

  const auto clean = simulation_model(1, 60, 30, 0.0, true, 4);
  const auto big = tvdmss(clean.data, TvdmssOptions{10.0, 10.0, 0.5});
  EXPECT_TRUE(big.outliers.empty());
  EXPECT_THROW(tvdmss(oracle::constant_curves({0, 1, 2, 3}, 4)), Error);
}

TEST(Transforms, CenterNormalizeDifference) {
  const CurveSample flat = oracle::constant_curves({3.0}, 5);
  const CurveSample centred = center_curves(flat);
  for (double v : centred.values.row(0)) EXPECT_EQ(v, 0.0);

  RandomSource rng(5);
  const CurveSample s = oracle::random_sample(rng, 8, 12);
  std::size_t degenerate = 99;
  const CurveSample n2 = normalize_curves(s, &degenerate);
  EXPECT_EQ(degenerate, 0u);
  for (std::size_t i = 0; i < s.n(); ++i) {
    double ss = 0;
    for (double v : n2.values.row(i)) ss += v * v;
    EXPECT_NEAR(std::sqrt(ss / 12.0), 1.0, 1e-12);
  }
  std::size_t flat_count = 0;
  const CurveSample nz = normalize_curves(oracle::constant_curves({1.0, 2.0}, 4), &flat_count);
  EXPECT_EQ(flat_count, 2u);
  for (double v : nz.values.row(1)) EXPECT_EQ(v, 0.0);

  const double a = 1.7;
  Matrix q(1, 9);
  const Grid g = uniform_grid(9);
  for (std::size_t t = 0; t < 9; ++t) q(0, t) = a * g[t] * g[t];
  const CurveSample dd = difference_curves(difference_curves(CurveSample(q, g)));
  EXPECT_EQ(dd.p(), 7u);
  const double h = g[1] - g[0];
  for (double v : dd.values.row(0)) EXPECT_NEAR(v, 2.0 * a * h * h, 1e-12);
  EXPECT_EQ(difference_curves(CurveSample(q, g)).grid[0], g[1]);
}

TEST(Transforms, DifferenceCommutesWithPermutation) {
  RandomSource rng(6);
  const CurveSample s = oracle::random_sample(rng, 6, 7);
  const std::vector<std::size_t> order{2, 0, 5, 1, 4, 3};
  EXPECT_EQ(difference_curves(permute_rows(s, order)).values, permute_rows(difference_curves(s), order).values);
}

TEST(Transforms, ParseRoundTrip) {
  for (auto t : {Transform::T0, Transform::D0, Transform::T1, Transform::T2, Transform::D1, Transform::D2, Transform::O})
    EXPECT_EQ(parse_transform(to_string(t)), t);
  EXPECT_THROW(parse_transform("T9"), Error);
  for (auto m : {DepthMethod::BD, DepthMethod::MBD, DepthMethod::ERLD, DepthMethod::DQ, DepthMethod::LInf,
                 DepthMethod::Extremal, DepthMethod::TVD, DepthMethod::RMD})
    EXPECT_EQ(parse_depth_method(to_string(m)), m);
  try {
    parse_depth_method("nope");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownDepthMethod);
  }
}

TEST(SeqTransform, ShiftedAndScaledLines) {
  const CurveSample s = from_functions({[](double t) { return t; }, [](double t) { return t + 5.0; },
                                        [](double t) { return 2.0 * t; }},
                                       11);
  RandomSource rng(7);
  SeqTransformOptions opts;
  opts.save_data = true;
  const auto r = seq_transform(s, rng, opts);
  ASSERT_EQ(r.stages.size(), 3u);
  EXPECT_EQ(r.stages[0].label, "T0");
  EXPECT_EQ(r.stages[0].outliers, (IndexSet{1}));
  EXPECT_TRUE(r.stages[2].outliers.empty());
  ASSERT_TRUE(r.stages[2].data.has_value());
  for (std::size_t t = 0; t < 11; ++t) EXPECT_NEAR(r.stages[2].data->values(2, t), r.stages[2].data->values(0, t), 1e-12);
  const auto diffs = stage_set_differences(r);
  EXPECT_EQ(diffs[0], (IndexSet{1}));
  EXPECT_TRUE(diffs[2].empty());
}

TEST(SeqTransform, LabelsWarningsAndErrors) {
  bool dup = false;
  EXPECT_EQ(stage_labels({Transform::T0, Transform::D1, Transform::D1}, &dup),
            (std::vector<std::string>{"T0", "D1_1", "D1_2"}));
  EXPECT_TRUE(dup);

  RandomSource rng(8);
  const CurveSample s = oracle::random_sample(rng, 10, 6);
  SeqTransformOptions empty;
  empty.sequence.clear();
  try {
    seq_transform(s, rng, empty);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptySequence);
  }
  SeqTransformOptions with_o;
  with_o.sequence = {Transform::O};
  try {
    seq_transform(s, rng, with_o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OOnUnivariate);
  }
  SeqTransformOptions dd;
  dd.sequence = {Transform::D1, Transform::D1};
  const auto r = seq_transform(s, rng, dd);
  EXPECT_FALSE(r.warnings.empty());
  for (const auto& st : r.stages)
    for (auto i : st.outliers) EXPECT_LT(i, s.n());
}

TEST(SeqTransform, MultivariateNeedsOFirst) {
  RandomSource rng(9);
  const CurveSample a = oracle::random_sample(rng, 12, 6);
  const CurveSample b = oracle::random_sample(rng, 12, 6);
  const MultiCurveSample m({a.values, b.values}, a.grid);
  SeqTransformOptions t0;
  t0.sequence = {Transform::T0};
  try {
    seq_transform(m, rng, t0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MultivariateStage);
  }
  SeqTransformOptions o;
  o.sequence = {Transform::O, Transform::T1};
  o.depth_method = DepthMethod::ERLD;
  o.erld_type = ErldType::OneSidedRight;
  EXPECT_EQ(seq_transform(m, rng, o).stages.size(), 2u);
}

TEST(SeqTransform, StagesDependOnlyOnCurrentData) {
  RandomSource rng(10);
  const CurveSample s = oracle::random_sample(rng, 15, 10);
  SeqTransformOptions full;
  full.sequence = {Transform::T0, Transform::T1};
  full.save_data = true;
  const auto r = seq_transform(s, rng, full);
  SeqTransformOptions only;
  only.sequence = {Transform::T0};
  const auto direct = seq_transform(*r.stages[1].data, rng, only);
  EXPECT_EQ(direct.stages[0].outliers, r.stages[1].outliers);
}

TEST(OTransform, NonnegativeZeroAtCenterAndPlantedOutlierLargest) {
  const CurveSample s = oracle::constant_curves({0, 1, 2, 3, 4}, 5);
  RandomSource rng(11);
  const CurveSample o1 = o_transform(MultiCurveSample(s), rng);
  for (double v : o1.values.row(2)) EXPECT_EQ(v, 0.0);

  RandomSource data(12);
  const std::size_t n = 30, p = 15;
  std::vector<Matrix> dims(2, Matrix(n, p));
  for (auto& m : dims)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t t = 0; t < p; ++t) m(i, t) = data.normal();
  for (std::size_t t = 0; t < p; ++t) {
    dims[0](4, t) += 6.0;
    dims[1](4, t) -= 6.0;
  }
  const CurveSample o = o_transform(MultiCurveSample(dims, uniform_grid(p)), rng);
  std::vector<double> means(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (double v : o.values.row(i)) {
      EXPECT_GE(v, 0.0);
      means[i] += v / static_cast<double>(p);
    }
  }
  EXPECT_EQ(std::max_element(means.begin(), means.end()) - means.begin(), 4);
}

TEST(Msplot, UnivariateEqualsEmbeddedSample) {
  const auto sim = simulation_model(1, 60, 25, 0.1, true, 13);
  RandomSource a(14), b(14);
  const MsplotResult x = msplot(sim.data, a);
  const MsplotResult y = msplot(MultiCurveSample(sim.data), b);
  EXPECT_EQ(x.outliers, y.outliers);
  EXPECT_EQ(x.distances, y.distances);
  EXPECT_EQ(x.vo, y.vo);
}

TEST(Msplot, OutliersAreDistancesAboveThreshold) {
  const auto sim = simulation_model(1, 80, 30, 0.1, true, 15);
  RandomSource rng(16);
  const MsplotResult r = msplot(sim.data, rng);
  IndexSet expect;
  for (std::size_t i = 0; i < r.distances.size(); ++i)
    if (r.distances[i] > r.cutoff.threshold) expect.push_back(i);
  EXPECT_EQ(r.outliers, expect);
  for (auto i : sim.true_outliers) EXPECT_NE(std::find(r.outliers.begin(), r.outliers.end(), i), r.outliers.end());
}

TEST(Msplot, DuplicatingCurvesGivesSymmetricFlags) {
  const auto sim = simulation_model(1, 50, 25, 0.1, true, 17);
  const std::size_t n = sim.data.n();
  Matrix twice(2 * n, sim.data.p());
  for (std::size_t i = 0; i < 2 * n; ++i)
    for (std::size_t t = 0; t < sim.data.p(); ++t) twice(i, t) = sim.data.values(i % n, t);
  RandomSource a(18), b(18);
  const MsplotResult base = msplot(sim.data, a);
  const MsplotResult dup = msplot(CurveSample(twice, sim.data.grid), b);
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_EQ(dup.mo.row(i)[0], dup.mo.row(i + n)[0]);
    EXPECT_DOUBLE_EQ(dup.vo[i], base.vo[i]);
    EXPECT_EQ(dup.distances[i], dup.distances[i + n]);
    EXPECT_EQ(contains(dup.outliers, i), contains(dup.outliers, i + n)) << i;
  }
  for (auto i : base.outliers) EXPECT_TRUE(contains(dup.outliers, i)) << i;
  for (auto i : sim.true_outliers) EXPECT_TRUE(contains(dup.outliers, i)) << i;
}

TEST(Msplot, TooFewCurves) {
  RandomSource rng(19);
  EXPECT_THROW(msplot(oracle::random_sample(rng, 6, 5), rng), Error);
}
