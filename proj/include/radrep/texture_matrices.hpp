#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "radrep/discretize.hpp"

namespace radrep {

enum class Dimensionality { TwoD, ThreeD };

using Offset = std::array<int, 3>;

/// 13 unique unit offsets in 3D, or the 4 in-plane offsets (dz == 0) in 2D.
std::span<const Offset> texture_directions(Dimensionality dim);

/// 26 neighbours in 3D, the 8 in-plane neighbours in 2D.
std::span<const Offset> neighbourhood(Dimensionality dim);

struct GlcMatrix {
  int numGrayLevels = 0;
  /// Symmetrized pair counts, row-major Ng x Ng, index (i-1)*Ng + (j-1).
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;
  std::vector<double> probs;

  double p(int i, int j) const { return probs[static_cast<std::size_t>((i - 1) * numGrayLevels + (j - 1))]; }
};

struct GlrlMatrix {
  int numGrayLevels = 0;
  int maxRunLength = 0;
  /// Row-major Ng x Nr, index (level-1)*Nr + (length-1).
  std::vector<std::uint64_t> counts;
  std::uint64_t totalRuns = 0;
  std::size_t roiVoxels = 0;
  std::size_t numDirections = 0;

  std::uint64_t count(int level, int length) const {
    return counts[static_cast<std::size_t>((level - 1) * maxRunLength + (length - 1))];
  }
};

struct GlszMatrix {
  int numGrayLevels = 0;
  int maxZoneSize = 0;
  /// Row-major Ng x Ns, index (level-1)*Ns + (size-1).
  std::vector<std::uint64_t> counts;
  std::uint64_t totalZones = 0;
  std::size_t roiVoxels = 0;

  std::uint64_t count(int level, int size) const {
    return counts[static_cast<std::size_t>((level - 1) * maxZoneSize + (size - 1))];
  }
};

GlcMatrix build_glcm(const DiscretizedRoi& disc, Dimensionality dim);
GlcMatrix build_glcm(const DiscretizedRoi& disc, std::span<const Offset> offsets);

GlrlMatrix build_glrlm(const DiscretizedRoi& disc, Dimensionality dim);
GlrlMatrix build_glrlm(const DiscretizedRoi& disc, std::span<const Offset> directions);

GlszMatrix build_glszm(const DiscretizedRoi& disc, Dimensionality dim);

/// Connected-component labelling of the nonzero entries of `labels`, where two
/// neighbours join when their label values are equal. Returns one component
/// id per voxel (-1 outside) and the component count via `count`.
std::vector<int> label_components(const Dims& dims, std::span<const int> labels, std::span<const Offset> neighbours,
                                  int& count);

}  // namespace radrep
