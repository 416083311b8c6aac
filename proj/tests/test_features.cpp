#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <numbers>

#include "oracles.hpp"
#include "radrep/error.hpp"
#include "radrep/preprocess.hpp"

using namespace radrep;

namespace {

std::optional<double> get(const FeatureMap& m, FeatureClass cls, const std::string& name) {
  const auto it = m.find({cls, name});
  REQUIRE_MESSAGE(it != m.end(), name);
  return it->second;
}

double val(const FeatureMap& m, FeatureClass cls, const std::string& name) {
  const auto v = get(m, cls, name);
  REQUIRE_MESSAGE(v.has_value(), name);
  return *v;
}

/// Volume + mask over a 1 x n x 1 line holding `values`.
std::pair<VolumeGrid, RoiMask> line(const std::vector<double>& values) {
  const Dims d{values.size(), 1, 1};
  return {VolumeGrid(d, {1, 1, 1}, values), RoiMask(d, {1, 1, 1}, std::vector<std::uint8_t>(values.size(), 1))};
}

RoiMask box(Dims grid, Dims lo, Dims hi, Spacing s = {1, 1, 1}) {
  RoiMask m(grid, s, std::vector<std::uint8_t>(grid[0] * grid[1] * grid[2], 0));
  for (std::size_t z = lo[2]; z < hi[2]; ++z) {
    for (std::size_t y = lo[1]; y < hi[1]; ++y) {
      for (std::size_t x = lo[0]; x < hi[0]; ++x) m.labels[m.index(x, y, z)] = 1;
    }
  }
  return m;
}

void check_against(const FeatureMap& got, FeatureClass cls, const std::map<std::string, std::optional<double>>& want) {
  std::size_t seen = 0;
  for (const auto& [id, v] : got) {
    if (id.cls != cls) continue;
    ++seen;
    const auto it = want.find(id.name);
    REQUIRE_MESSAGE(it != want.end(), id.name);
    REQUIRE(v.has_value() == it->second.has_value());
    if (v) CHECK_MESSAGE(oracle::close(*v, *it->second, 1e-12), id.name << ": " << *v << " vs " << *it->second);
  }
  CHECK(seen == want.size());
}

}  // namespace

TEST_CASE("catalogs are sorted, complete and disjoint from the exclusion list") {
  for (auto cls : all_classes()) {
    const auto& names = feature_catalog(cls);
    CHECK(std::is_sorted(names.begin(), names.end()));
    for (const auto& n : names) CHECK(excluded_features().count({cls, n}) == 0);
  }
  CHECK(excluded_features().size() == 8);

  const auto [vol, mask] = line({1, 5, 9, 2, 7, 7, 3});
  const auto all = extract_features(vol, mask, {2.0}, Dimensionality::TwoD);
  for (const auto& [id, v] : all) {
    CHECK(excluded_features().count(id) == 0);
    const auto& cat = feature_catalog(id.cls);
    CHECK(std::find(cat.begin(), cat.end(), id.name) != cat.end());
  }
  std::size_t expected = 0;
  for (auto cls : all_classes()) expected += feature_catalog(cls).size();
  CHECK(all.size() == expected);
}

TEST_CASE("first order: [1..5]") {
  const auto [vol, mask] = line({1, 2, 3, 4, 5});
  const auto f = firstorder_features(vol, mask, {1.0});
  const auto c = FeatureClass::FirstOrder;
  CHECK(val(f, c, "Mean") == 3.0);
  CHECK(val(f, c, "Median") == 3.0);
  CHECK(val(f, c, "Variance") == 2.0);
  CHECK(val(f, c, "Energy") == 55.0);
  CHECK(val(f, c, "Range") == 4.0);
  CHECK(val(f, c, "Minimum") == 1.0);
  CHECK(val(f, c, "Maximum") == 5.0);
  CHECK(val(f, c, "Skewness") == 0.0);
  CHECK(val(f, c, "Kurtosis") == doctest::Approx(6.8 / 4.0));  // m4 = 6.8, m2 = 2
  CHECK(val(f, c, "MeanAbsoluteDeviation") == doctest::Approx(1.2));
  CHECK(val(f, c, "RootMeanSquared") == doctest::Approx(std::sqrt(11.0)));
  CHECK(val(f, c, "Entropy") == doctest::Approx(std::log2(5.0)));
  CHECK(val(f, c, "Uniformity") == doctest::Approx(0.2));
}

TEST_CASE("first order: constant ROI") {
  const auto [vol, mask] = line({4, 4, 4, 4});
  const auto f = firstorder_features(vol, mask, {15.0});
  const auto c = FeatureClass::FirstOrder;
  CHECK(val(f, c, "Entropy") == 0.0);
  CHECK(val(f, c, "Uniformity") == 1.0);
  CHECK(val(f, c, "Variance") == 0.0);
  CHECK_FALSE(get(f, c, "Skewness").has_value());
  CHECK_FALSE(get(f, c, "Kurtosis").has_value());
}

TEST_CASE("first order: nearest-rank percentiles and lower median") {
  std::vector<double> v(9, 0.0);
  v.push_back(100.0);
  const auto [vol, mask] = line(v);
  const auto f = firstorder_features(vol, mask, {10.0});
  const auto c = FeatureClass::FirstOrder;
  CHECK(val(f, c, "10Percentile") == 0.0);
  CHECK(val(f, c, "90Percentile") == 0.0);
  CHECK(val(f, c, "Maximum") == 100.0);

  const auto [v2, m2] = line({4, 1, 3, 2});
  CHECK(val(firstorder_features(v2, m2, {1.0}), c, "Median") == 2.0);
}

TEST_CASE("first order: out-of-ROI voxels are ignored") {
  VolumeGrid vol({4, 1, 1}, {1, 1, 1}, {1, 2, 3, 1000});
  RoiMask mask({4, 1, 1}, {1, 1, 1}, {1, 1, 1, 0});
  CHECK(val(firstorder_features(vol, mask, {1.0}), FeatureClass::FirstOrder, "Maximum") == 3.0);
}

TEST_CASE("first order matches direct moments on random ROIs") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g(50.0, 20.0);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 2 + rng() % 60;
    std::vector<double> x(n);
    for (double& v : x) v = g(rng);
    const auto [vol, mask] = line(x);
    const auto f = firstorder_features(vol, mask, {7.5});
    long double mean = 0;
    for (double v : x) mean += v;
    mean /= n;
    long double m2 = 0, m3 = 0, m4 = 0;
    for (double v : x) {
      const long double d = v - mean;
      m2 += d * d;
      m3 += d * d * d;
      m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    const auto c = FeatureClass::FirstOrder;
    CHECK(oracle::close(val(f, c, "Mean"), static_cast<double>(mean), 1e-12));
    CHECK(oracle::close(val(f, c, "Variance"), static_cast<double>(m2), 1e-10));
    CHECK(oracle::close(val(f, c, "Skewness"), static_cast<double>(m3 / std::pow(m2, 1.5L)), 1e-9));
    CHECK(oracle::close(val(f, c, "Kurtosis"), static_cast<double>(m4 / (m2 * m2)), 1e-9));
    auto sorted = x;
    std::sort(sorted.begin(), sorted.end());
    const auto rank = [&](double q) { return static_cast<std::size_t>(std::ceil(q * static_cast<double>(n) - 1e-9)); };
    CHECK(val(f, c, "10Percentile") == sorted[std::max<std::size_t>(1, rank(0.1)) - 1]);
    CHECK(val(f, c, "90Percentile") == sorted[std::max<std::size_t>(1, rank(0.9)) - 1]);
  }
}

TEST_CASE("shape: single voxel") {
  const auto f = shape_features(box({3, 3, 3}, {1, 1, 1}, {2, 2, 2}));
  const auto c = FeatureClass::Shape;
  CHECK(val(f, c, "Volume") == 1.0);
  CHECK(val(f, c, "SurfaceArea") == 6.0);
  CHECK(val(f, c, "SurfaceVolumeRatio") == 6.0);
  CHECK(val(f, c, "Maximum3DDiameter") == 0.0);
  CHECK_FALSE(get(f, c, "Elongation").has_value());
}

TEST_CASE("shape: 10x10x10 cube") {
  const auto f = shape_features(box({12, 12, 12}, {1, 1, 1}, {11, 11, 11}));
  const auto c = FeatureClass::Shape;
  CHECK(val(f, c, "Volume") == 1000.0);
  CHECK(val(f, c, "SurfaceArea") == 600.0);
  CHECK(val(f, c, "Sphericity") == doctest::Approx(std::cbrt(36.0 * std::numbers::pi * 1e6) / 600.0));
  CHECK(val(f, c, "Sphericity") == doctest::Approx(0.806).epsilon(1e-3));
  CHECK(val(f, c, "Maximum3DDiameter") == doctest::Approx(std::sqrt(3.0) * 9.0));
  CHECK(val(f, c, "Maximum2DDiameterSlice") == doctest::Approx(std::sqrt(2.0) * 9.0));
  CHECK(val(f, c, "Elongation") == doctest::Approx(1.0));
  // variance of a uniform integer grid 0..9 is 8.25
  CHECK(val(f, c, "MajorAxisLength") == doctest::Approx(4.0 * std::sqrt(8.25)));
}

TEST_CASE("shape: anisotropic spacing and per-plane diameters") {
  // a 4 x 2 x 3 block with spacing (0.5, 1, 2)
  const Spacing s{0.5, 1.0, 2.0};
  const auto f = shape_features(box({6, 4, 5}, {1, 1, 1}, {5, 3, 4}, s));
  const auto c = FeatureClass::Shape;
  CHECK(val(f, c, "Volume") == doctest::Approx(24 * 1.0));
  const double area = 2 * (4 * 0.5 * 2 * 1.0) + 2 * (4 * 0.5 * 3 * 2.0) + 2 * (2 * 1.0 * 3 * 2.0);
  CHECK(val(f, c, "SurfaceArea") == doctest::Approx(area));
  CHECK(val(f, c, "Maximum2DDiameterSlice") == doctest::Approx(std::hypot(1.5, 1.0)));   // same z
  CHECK(val(f, c, "Maximum2DDiameterColumn") == doctest::Approx(std::hypot(1.5, 4.0)));  // same y
  CHECK(val(f, c, "Maximum2DDiameterRow") == doctest::Approx(std::hypot(1.0, 4.0)));     // same x
  CHECK(val(f, c, "Maximum3DDiameter") == doctest::Approx(std::sqrt(1.5 * 1.5 + 1.0 + 16.0)));
}

TEST_CASE("shape depends on the mask only") {
  std::mt19937_64 rng(22);
  const auto mask = box({6, 6, 4}, {1, 0, 1}, {5, 4, 3});
  VolumeGrid a(mask.dims, mask.spacing, std::vector<double>(mask.size()));
  VolumeGrid b = a;
  std::normal_distribution<double> g;
  for (double& v : a.values) v = g(rng);
  for (double& v : b.values) v = 100 * g(rng);
  const auto fa = extract_features(a, mask, {0.5}, Dimensionality::ThreeD);
  const auto fb = extract_features(b, mask, {25.0}, Dimensionality::TwoD);
  for (const auto& name : feature_catalog(FeatureClass::Shape)) {
    CHECK(get(fa, FeatureClass::Shape, name) == get(fb, FeatureClass::Shape, name));
  }
}

TEST_CASE("glcm features: hand matrix and degenerate matrix") {
  DiscretizedRoi d;
  d.dims = {3, 2, 1};
  d.levels = {1, 1, 2, 2, 2, 3};
  d.numGrayLevels = 3;
  const std::array<Offset, 1> horizontal{{{1, 0, 0}}};
  const auto f = glcm_features(build_glcm(d, horizontal));
  const auto c = FeatureClass::Glcm;
  CHECK(val(f, c, "Contrast") == doctest::Approx(0.5));
  CHECK(val(f, c, "JointEnergy") == doctest::Approx(0.1875));

  DiscretizedRoi one;
  one.dims = {2, 2, 1};
  one.levels = {1, 1, 1, 1};
  one.numGrayLevels = 1;
  const auto g = glcm_features(build_glcm(one, Dimensionality::TwoD));
  CHECK(val(g, c, "Contrast") == 0.0);
  CHECK(val(g, c, "JointEnergy") == 1.0);
  CHECK(val(g, c, "JointEntropy") == 0.0);
  CHECK(val(g, c, "Idm") == 1.0);
  CHECK_FALSE(get(g, c, "Correlation").has_value());
}

TEST_CASE("glcm features match the pair-multiset oracle; entropy and energy bounds") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 80; ++trial) {
    const auto d = oracle::random_roi(rng, {6, 6, 3}, 6);
    const auto dim = trial % 2 ? Dimensionality::ThreeD : Dimensionality::TwoD;
    const auto pairs = oracle::glcm_pairs(d, dim);
    if (pairs.empty()) continue;
    const auto f = glcm_features(build_glcm(d, dim));
    check_against(f, FeatureClass::Glcm, oracle::glcm_features(pairs));
    const double ng = d.numGrayLevels;
    CHECK(val(f, FeatureClass::Glcm, "JointEntropy") <= std::log2(ng * ng) + 1e-12);
    CHECK(val(f, FeatureClass::Glcm, "JointEnergy") >= 1.0 / (ng * ng) - 1e-12);
    CHECK(val(f, FeatureClass::Glcm, "JointEnergy") <= 1.0 + 1e-12);
  }
}

TEST_CASE("glrlm features: single-term examples") {
  const std::array<Offset, 1> horizontal{{{1, 0, 0}}};
  DiscretizedRoi run;
  run.dims = {4, 1, 1};
  run.levels = {2, 2, 2, 2};
  run.numGrayLevels = 2;
  const auto f = glrlm_features(build_glrlm(run, horizontal));
  const auto c = FeatureClass::Glrlm;
  CHECK(val(f, c, "ShortRunEmphasis") == 1.0 / 16);
  CHECK(val(f, c, "LongRunEmphasis") == 16.0);
  CHECK(val(f, c, "HighGrayLevelRunEmphasis") == 4.0);
  CHECK(val(f, c, "RunPercentage") == 0.25);

  DiscretizedRoi alt = run;
  alt.levels = {1, 2, 1, 2};
  const auto g = glrlm_features(build_glrlm(alt, horizontal));
  CHECK(val(g, c, "ShortRunEmphasis") == 1.0);
  CHECK(val(g, c, "LongRunEmphasis") == 1.0);
}

TEST_CASE("glrlm / glszm features match the item-multiset oracle") {
  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 80; ++trial) {
    const auto d = oracle::random_roi(rng, {6, 6, 3}, 5);
    const auto dim = trial % 2 ? Dimensionality::ThreeD : Dimensionality::TwoD;
    const double nv = static_cast<double>(d.roi_voxels());
    const double ndir = static_cast<double>(texture_directions(dim).size());
    std::map<std::string, std::optional<double>> runs, zones;
    for (const auto& [k, v] : oracle::size_features(oracle::glrlm_runs(d, dim), nv * ndir, true)) runs[k] = v;
    for (const auto& [k, v] : oracle::size_features(oracle::glszm_zones(d, dim), nv, false)) zones[k] = v;
    check_against(glrlm_features(build_glrlm(d, dim)), FeatureClass::Glrlm, runs);
    check_against(glszm_features(build_glszm(d, dim)), FeatureClass::Glszm, zones);
  }
}

TEST_CASE("glszm features: single zone and checkerboard") {
  DiscretizedRoi d;
  d.dims = {5, 1, 1};
  d.levels = {3, 3, 3, 3, 3};
  d.numGrayLevels = 3;
  const auto f = glszm_features(build_glszm(d, Dimensionality::ThreeD));
  const auto c = FeatureClass::Glszm;
  CHECK(val(f, c, "SmallAreaEmphasis") == doctest::Approx(1.0 / 25));
  CHECK(val(f, c, "ZonePercentage") == doctest::Approx(1.0 / 5));

  DiscretizedRoi board;
  board.dims = {4, 4, 1};
  board.numGrayLevels = 2;
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) board.levels.push_back((x + y) % 2 + 1);
  }
  const auto g = glszm_features(build_glszm(board, Dimensionality::TwoD));
  CHECK(val(g, c, "SmallAreaEmphasis") == doctest::Approx(1.0 / 64));
  CHECK(val(g, c, "ZonePercentage") == doctest::Approx(2.0 / 16));
}

TEST_CASE("extract_features propagates GeometryMismatch") {
  VolumeGrid vol({3, 3, 3}, {1, 1, 1}, std::vector<double>(27, 1.0));
  RoiMask mask({3, 3, 2}, {1, 1, 1}, std::vector<std::uint8_t>(18, 1));
  try {
    extract_features(vol, mask, {1.0}, Dimensionality::ThreeD);
    FAIL("expected GeometryMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::GeometryMismatch);
  }
}

TEST_CASE("skewness and kurtosis are invariant under both normalization modes") {
  std::mt19937_64 rng(25);
  std::gamma_distribution<double> g(2.0, 30.0);
  const Dims dims{8, 8, 4};
  VolumeGrid vol(dims, {0.7, 0.7, 3.0}, std::vector<double>(256));
  for (double& v : vol.values) v = g(rng);
  const auto roi = box(dims, {2, 2, 1}, {6, 7, 3}, vol.spacing);
  const auto ref = box(dims, {0, 0, 0}, {2, 8, 4}, vol.spacing);
  const auto base = firstorder_features(vol, roi, {15});
  for (const auto& spec : {NormalizationSpec::whole_image(), NormalizationSpec::reference_region(ref)}) {
    const auto f = firstorder_features(normalize(vol, spec), roi, {15});
    for (const char* name : {"Skewness", "Kurtosis"}) {
      CHECK(std::abs(val(f, FeatureClass::FirstOrder, name) - val(base, FeatureClass::FirstOrder, name)) < 1e-9);
    }
  }
}
