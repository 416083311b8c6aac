#pragma once

#include <string>
#include <vector>

#include "radrep/volume_io.hpp"

namespace radrep {

struct DiscretizationSpec {
  double binWidth = 15.0;
};

/// Gray levels on the source grid: 0 outside the ROI, 1..numGrayLevels inside.
struct DiscretizedRoi {
  Dims dims{0, 0, 0};
  Spacing spacing{1.0, 1.0, 1.0};
  std::vector<int> levels;
  int numGrayLevels = 0;
  double roiMin = 0.0;
  double roiMax = 0.0;
  /// Non-empty when the level count falls outside [8, 128].
  std::string diagnostic;

  std::size_t size() const noexcept { return dims[0] * dims[1] * dims[2]; }
  std::size_t index(std::size_t x, std::size_t y, std::size_t z) const noexcept {
    return x + dims[0] * (y + dims[1] * z);
  }
  int level(std::size_t x, std::size_t y, std::size_t z) const { return levels[index(x, y, z)]; }
  std::size_t roi_voxels() const noexcept;
};

/// Fixed-bin-width quantization with bin edges anchored at the ROI minimum:
/// level = floor((x - roiMin) / binWidth) + 1. Out-of-ROI intensities are
/// ignored entirely.
DiscretizedRoi discretize_roi(const VolumeGrid& volume, const RoiMask& mask, const DiscretizationSpec& spec);

}  // namespace radrep
