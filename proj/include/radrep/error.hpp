#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace radrep {

enum class ErrorCode {
  // volume_io
  MissingHeaderField,
  UnsupportedEncoding,
  PayloadSizeMismatch,
  NonFiniteValue,
  EmptyMask,
  NonBinaryLabel,
  // preprocess
  ZeroVariance,
  MissingReferenceMask,
  SigmaTooSmallForGrid,
  AxisTooShort,
  InvalidFilterSpec,
  // discretize / texture
  GeometryMismatch,
  NoValidPairs,
  // repeatability
  DegenerateData,
  MissingVolumeReference,
  InsufficientSubjects,
  FeatureSetMismatch,
  DegenerateSamples,
  InsufficientFeatures,
  NoSharedFeatures,
  // pipeline
  InvalidManifest,
  SchemaMismatch,
  MissingReport,
  IoError,
};

std::string_view error_name(ErrorCode code) noexcept;

/// Every recoverable failure in the library is reported through this type.
/// The code is stable and is what the pipeline writes to its errors sidecar.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace radrep
