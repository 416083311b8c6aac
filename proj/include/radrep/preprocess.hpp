#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "radrep/volume_io.hpp"

namespace radrep {

enum class NormalizationMode { None, WholeImage, ReferenceRegion };

struct NormalizationSpec {
  NormalizationMode mode = NormalizationMode::None;
  double targetMean = 300.0;
  double targetStd = 100.0;
  std::optional<RoiMask> referenceMask;

  static NormalizationSpec none() { return {}; }
  static NormalizationSpec whole_image(double mean = 300.0, double stddev = 100.0) {
    return {NormalizationMode::WholeImage, mean, stddev, std::nullopt};
  }
  static NormalizationSpec reference_region(RoiMask reference, double mean = 100.0, double stddev = 10.0) {
    return {NormalizationMode::ReferenceRegion, mean, stddev, std::move(reference)};
  }
};

/// Shifts and scales every voxel so that the statistics region (the whole
/// image, or the reference mask) ends with the target mean and population
/// standard deviation.
VolumeGrid normalize(const VolumeGrid& volume, const NormalizationSpec& spec);

enum class FilterKind { Original, LoG, Wavelet2D, Wavelet3D, Square, SquareRoot, Logarithm, Exponential };

enum class WaveletBasis { Haar };

struct FilterSpec {
  FilterKind kind = FilterKind::Original;
  std::optional<double> sigmaMm;
  std::optional<std::string> subband;
  WaveletBasis basis = WaveletBasis::Haar;

  static FilterSpec original() { return {}; }
  static FilterSpec log(double sigma) { return {FilterKind::LoG, sigma, std::nullopt}; }
  static FilterSpec wavelet(std::string band);
  static FilterSpec pointwise(FilterKind kind) { return {kind, std::nullopt, std::nullopt}; }

  /// Throws InvalidFilterSpec when the optional fields do not match `kind`.
  void validate() const;

  friend bool operator==(const FilterSpec&, const FilterSpec&) = default;
};

/// Column prefix, e.g. `original`, `log-sigma-2-0-mm-3D`, `wavelet-HL`, `squareroot`.
std::string filter_name(const FilterSpec& spec);
FilterSpec parse_filter_name(std::string_view name);

/// Subband labels in emission order; letter i is the filter applied along axis i.
const std::vector<std::string>& wavelet_subbands(bool three_d);

/// Scale-normalized Laplacian of Gaussian, sigma in millimetres.
VolumeGrid filter_log(const VolumeGrid& volume, double sigmaMm);

/// Single-level undecimated Haar transform with periodic extension. 2D mode
/// filters axes 0 and 1 slice by slice.
std::map<std::string, VolumeGrid> filter_wavelet(const VolumeGrid& volume, bool three_d);

VolumeGrid filter_pointwise(const VolumeGrid& volume, FilterKind kind);

/// Dispatches on spec.kind. Wavelet kinds return only the requested subband.
VolumeGrid apply_filter(const VolumeGrid& volume, const FilterSpec& spec);

}  // namespace radrep
