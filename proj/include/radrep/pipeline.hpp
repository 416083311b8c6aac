#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "radrep/features.hpp"
#include "radrep/preprocess.hpp"
#include "radrep/repeatability.hpp"
#include "radrep/texture_matrices.hpp"

namespace radrep {

enum class ImageType { T2AX, ADC, SUB };

std::string_view image_type_code(ImageType t) noexcept;       // filename code: T2AX, ADC, SUB
std::string_view canonical_type_name(ImageType t) noexcept;   // meta column: T2w, ADC, SUB
ImageType parse_image_type(std::string_view code);

struct MaskEntry {
  Structure structure = Structure::Tumor;
  std::filesystem::path path;
  /// Mask transferred by registration; used instead of `path` in registered runs.
  std::optional<std::filesystem::path> registeredPath;
};

struct CohortEntry {
  std::string subjectId;
  int timepoint = 1;
  ImageType imageType = ImageType::T2AX;
  std::filesystem::path imagePath;
  std::vector<MaskEntry> masks;
  std::optional<std::filesystem::path> referenceMaskPath;
};

struct RunSettings {
  std::vector<NormalizationMode> normalizationModes{NormalizationMode::None};
  std::vector<double> binWidths{15.0};
  std::vector<Dimensionality> dimensionalities{Dimensionality::TwoD};
  /// Filter names as written in the manifest; `log` and `wavelet` expand.
  std::vector<std::string> filters{"original"};
  bool registeredMasks = false;
  bool biasCorrected = false;
};

struct RunManifest {
  std::vector<CohortEntry> cohort;
  RunSettings settings;
};

/// Relative paths resolve against `base_dir`. Throws InvalidManifest.
RunManifest parse_manifest(const nlohmann::json& doc, const std::filesystem::path& base_dir);
RunManifest load_manifest(const std::filesystem::path& path);

/// One cell of the configuration space, minus the filter.
struct ExtractionConfig {
  NormalizationMode normalization = NormalizationMode::None;
  double binWidth = 15.0;
  Dimensionality dimensionality = Dimensionality::TwoD;
  bool registered = false;
  bool biasCorrected = false;
  ImageType imageType = ImageType::T2AX;
};

std::string_view normalization_name(NormalizationMode m) noexcept;  // none, wholeImage, referenceRegion
NormalizationMode parse_normalization(std::string_view name);
std::string_view dimensionality_name(Dimensionality d) noexcept;    // 2D, 3D

/// e.g. FullStudySettings_noNormalization_2D_T2AX_bin20.csv
std::string extraction_filename(const ExtractionConfig& config);
/// Inverse of extraction_filename; throws SchemaMismatch on missing codes.
ExtractionConfig parse_extraction_filename(const std::string& filename);

/// Expands `log`, `wavelet` and `all` for the given texture dimensionality.
std::vector<FilterSpec> expand_filters(const std::vector<std::string>& names, Dimensionality dim);

/// Feature columns in emission order: original_shape_* first, then for every
/// filter the first-order and texture classes.
std::vector<std::string> feature_columns(const std::vector<FilterSpec>& filters);

struct ExtractError {
  std::string subjectId;
  int timepoint = 0;
  std::string structure;
  std::string filter;
  std::string error;
  std::string message;
};

struct ExtractOutput {
  std::filesystem::path csv;
  std::size_t rows = 0;
  std::vector<ExtractError> errors;
};

struct ExtractSummary {
  std::vector<ExtractOutput> files;
  std::size_t diagnostics = 0;
  bool partial() const;
};

ExtractSummary run_extract(const RunManifest& manifest, const std::filesystem::path& out_dir, unsigned jobs = 1);

struct AnalyzeOptions {
  std::string reference = kDefaultReference;
  std::size_t topK = 3;
  TopKStatistic topKStatistic = TopKStatistic::MaxOverFilters;
  /// Pairs of input CSVs to compare feature by feature (a -> b).
  std::vector<std::pair<std::filesystem::path, std::filesystem::path>> compare;
};

/// Writes the per-table ICC CSVs, spread / KDE / rank reports, top-k and
/// filter-frequency JSON, deltas, and `reports.json` indexing all of them.
nlohmann::json run_analyze(const std::vector<std::filesystem::path>& csvs, const AnalyzeOptions& options,
                           const std::filesystem::path& out_dir);

/// Reads `reports.json` under `report_dir` and writes plot-ready CSVs.
std::vector<std::filesystem::path> run_plotdata(const std::filesystem::path& report_dir,
                                                const std::filesystem::path& out_dir);

/// Expands files, directories (their *.csv feature tables) and glob patterns.
std::vector<std::filesystem::path> resolve_inputs(const std::vector<std::string>& patterns);

}  // namespace radrep
