#include "radrep/error.hpp"

namespace radrep {

std::string_view error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingHeaderField: return "MissingHeaderField";
    case ErrorCode::UnsupportedEncoding: return "UnsupportedEncoding";
    case ErrorCode::PayloadSizeMismatch: return "PayloadSizeMismatch";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::NonBinaryLabel: return "NonBinaryLabel";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::MissingReferenceMask: return "MissingReferenceMask";
    case ErrorCode::SigmaTooSmallForGrid: return "SigmaTooSmallForGrid";
    case ErrorCode::AxisTooShort: return "AxisTooShort";
    case ErrorCode::InvalidFilterSpec: return "InvalidFilterSpec";
    case ErrorCode::GeometryMismatch: return "GeometryMismatch";
    case ErrorCode::NoValidPairs: return "NoValidPairs";
    case ErrorCode::DegenerateData: return "DegenerateData";
    case ErrorCode::MissingVolumeReference: return "MissingVolumeReference";
    case ErrorCode::InsufficientSubjects: return "InsufficientSubjects";
    case ErrorCode::FeatureSetMismatch: return "FeatureSetMismatch";
    case ErrorCode::DegenerateSamples: return "DegenerateSamples";
    case ErrorCode::InsufficientFeatures: return "InsufficientFeatures";
    case ErrorCode::NoSharedFeatures: return "NoSharedFeatures";
    case ErrorCode::InvalidManifest: return "InvalidManifest";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::MissingReport: return "MissingReport";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace radrep
