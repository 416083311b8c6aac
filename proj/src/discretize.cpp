#include "radrep/discretize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "radrep/error.hpp"

namespace radrep {

std::size_t DiscretizedRoi::roi_voxels() const noexcept {
  return static_cast<std::size_t>(std::count_if(levels.begin(), levels.end(), [](int l) { return l > 0; }));
}

DiscretizedRoi discretize_roi(const VolumeGrid& volume, const RoiMask& mask, const DiscretizationSpec& spec) {
  if (!(spec.binWidth > 0.0)) throw Error(ErrorCode::InvalidFilterSpec, "bin width must be positive");
  if (!check_geometry(volume, mask)) throw Error(ErrorCode::GeometryMismatch, "mask grid differs from image grid");

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < volume.values.size(); ++i) {
    if (mask.labels[i] == 0) continue;
    lo = std::min(lo, volume.values[i]);
    hi = std::max(hi, volume.values[i]);
  }
  if (lo > hi) throw Error(ErrorCode::EmptyMask, "ROI holds no voxel");

  DiscretizedRoi out;
  out.dims = volume.dims;
  out.spacing = volume.spacing;
  out.roiMin = lo;
  out.roiMax = hi;
  out.numGrayLevels = static_cast<int>(std::floor((hi - lo) / spec.binWidth)) + 1;
  out.levels.assign(volume.values.size(), 0);
  for (std::size_t i = 0; i < volume.values.size(); ++i) {
    if (mask.labels[i] == 0) continue;
    const int level = static_cast<int>(std::floor((volume.values[i] - lo) / spec.binWidth)) + 1;
    out.levels[i] = std::clamp(level, 1, out.numGrayLevels);
  }
  if (out.numGrayLevels < 8 || out.numGrayLevels > 128) {
    out.diagnostic = "bin width " + std::to_string(spec.binWidth) + " yields " + std::to_string(out.numGrayLevels) +
                     " gray levels (recommended range 8..128)";
  }
  return out;
}

}  // namespace radrep
