#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "radrep/features.hpp"

namespace radrep {

/// One feature column: `[pre-filter]_[feature group]_[feature name]`.
struct FeatureKey {
  std::string filter;
  FeatureClass cls = FeatureClass::FirstOrder;
  std::string name;

  std::string column() const;
  FeatureId id() const { return {cls, name}; }

  friend auto operator<=>(const FeatureKey&, const FeatureKey&) = default;
};

/// Splits a feature column name. Returns nullopt when the name does not follow
/// the grammar (unknown class, empty filter or feature name).
std::optional<FeatureKey> parse_feature_column(std::string_view column);

/// General-info column names (without the `general_info_` prefix), in order.
const std::vector<std::string>& general_info_columns();
/// Trailing meta columns, in order.
const std::vector<std::string>& meta_columns();

/// One row of a feature table: one image + mask combination.
struct FeatureRecord {
  std::vector<std::pair<std::string, std::string>> generalInfo;
  std::vector<std::pair<std::string, FeatureValue>> features;
  std::string study;               // subject id
  std::string series;              // "TP1" / "TP2"
  std::string canonicalType;       // T2w, ADC, SUB
  std::string segmentedStructure;  // structure_name()

  /// Parsed from `series`; 0 when it carries no trailing timepoint number.
  int timepoint() const;
};

std::string series_label(int timepoint);

/// Checks the header grammar: general_info_* block, feature columns, then the
/// meta columns. Returns an empty string when valid, else a description.
std::string validate_header(const std::vector<std::string>& header);

std::vector<std::string> record_header(const std::vector<std::string>& feature_columns);
void write_records(const std::filesystem::path& path, const std::vector<std::string>& feature_columns,
                   const std::vector<FeatureRecord>& records);
/// Throws SchemaMismatch when the header does not validate.
std::vector<FeatureRecord> read_records(const std::filesystem::path& path);

}  // namespace radrep
