#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "radrep/discretize.hpp"
#include "radrep/texture_matrices.hpp"
#include "radrep/volume_io.hpp"

namespace radrep {

enum class FeatureClass { FirstOrder, Shape, Glcm, Glrlm, Glszm };

/// `firstorder`, `shape`, `glcm`, `glrlm`, `glszm`.
std::string_view class_name(FeatureClass c) noexcept;
std::optional<FeatureClass> parse_class(std::string_view name) noexcept;
const std::vector<FeatureClass>& all_classes();

struct FeatureId {
  FeatureClass cls;
  std::string name;

  friend auto operator<=>(const FeatureId&, const FeatureId&) = default;
};

/// A missing value means the feature is undefined for this input (e.g.
/// Skewness of a constant ROI). Undefined values serialize as empty cells.
using FeatureValue = std::optional<double>;
using FeatureMap = std::map<FeatureId, FeatureValue>;

/// Emitted feature names per class, in column order.
const std::vector<std::string>& feature_catalog(FeatureClass c);

/// Names that are never emitted (correlated with another feature, or not
/// meaningful for single-slice ROIs).
const std::set<FeatureId>& excluded_features();

FeatureMap firstorder_features(const VolumeGrid& volume, const RoiMask& mask, const DiscretizationSpec& spec);
FeatureMap shape_features(const RoiMask& mask);
FeatureMap glcm_features(const GlcMatrix& m);
FeatureMap glrlm_features(const GlrlMatrix& m);
FeatureMap glszm_features(const GlszMatrix& m);

/// All five classes on an already-filtered volume.
FeatureMap extract_features(const VolumeGrid& filtered, const RoiMask& mask, const DiscretizationSpec& spec,
                            Dimensionality dim);

}  // namespace radrep
