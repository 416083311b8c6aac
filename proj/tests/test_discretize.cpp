#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "radrep/discretize.hpp"
#include "radrep/error.hpp"

using namespace radrep;

namespace {

std::pair<VolumeGrid, RoiMask> line(const std::vector<double>& values) {
  const Dims d{values.size(), 1, 1};
  return {VolumeGrid(d, {1, 1, 1}, values), RoiMask(d, {1, 1, 1}, std::vector<std::uint8_t>(values.size(), 1))};
}

}  // namespace

TEST_CASE("floor rule anchored at the ROI minimum") {
  const auto [v, m] = line({0, 5, 10, 14.9});
  const auto d = discretize_roi(v, m, {5.0});
  CHECK(d.levels == std::vector<int>{1, 2, 3, 3});
  CHECK(d.numGrayLevels == 3);
  CHECK(d.roiMin == 0.0);
  CHECK(d.roiMax == 14.9);
  CHECK_FALSE(d.diagnostic.empty());
}

TEST_CASE("constant ROI gives a single level") {
  const auto [v, m] = line({7, 7, 7});
  const auto d = discretize_roi(v, m, {15.0});
  CHECK(d.levels == std::vector<int>{1, 1, 1});
  CHECK(d.numGrayLevels == 1);
}

TEST_CASE("normalized range 0..600 with bin width 5 stays within 128 levels") {
  std::vector<double> x;
  for (int i = 0; i <= 600; i += 3) x.push_back(i);
  x.push_back(600);
  const auto [v, m] = line(x);
  const auto d = discretize_roi(v, m, {5.0});
  CHECK(d.numGrayLevels == 121);
  CHECK(d.diagnostic.empty());
}

TEST_CASE("levels are zero outside the ROI and within 1..Ng inside") {
  std::mt19937_64 rng(51);
  std::normal_distribution<double> g(100, 40);
  VolumeGrid v({6, 5, 3}, {1, 1, 1}, std::vector<double>(90));
  RoiMask m({6, 5, 3}, {1, 1, 1}, std::vector<std::uint8_t>(90));
  for (std::size_t i = 0; i < 90; ++i) {
    v.values[i] = g(rng);
    m.labels[i] = (rng() % 3) != 0;
  }
  const auto d = discretize_roi(v, m, {12.5});
  for (std::size_t i = 0; i < 90; ++i) {
    if (m.labels[i]) {
      CHECK(d.levels[i] >= 1);
      CHECK(d.levels[i] <= d.numGrayLevels);
    } else {
      CHECK(d.levels[i] == 0);
    }
  }
  CHECK(d.roi_voxels() == m.voxel_count());
}

TEST_CASE("errors") {
  const auto [v, m] = line({1, 2});
  RoiMask empty = m;
  std::fill(empty.labels.begin(), empty.labels.end(), 0);
  try {
    discretize_roi(v, empty, {1.0});
    FAIL("expected EmptyMask");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyMask);
  }
  RoiMask other({3, 1, 1}, {1, 1, 1}, {1, 1, 1});
  try {
    discretize_roi(v, other, {1.0});
    FAIL("expected GeometryMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::GeometryMismatch);
  }
  CHECK_THROWS_AS(discretize_roi(v, m, {0.0}), Error);
}
