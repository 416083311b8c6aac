#include "radrep/records.hpp"

#include <cctype>
#include <map>

#include "radrep/csv.hpp"
#include "radrep/error.hpp"

namespace radrep {

namespace {
constexpr std::string_view kGeneralPrefix = "general_info_";
}

std::string FeatureKey::column() const { return filter + "_" + std::string(class_name(cls)) + "_" + name; }

std::optional<FeatureKey> parse_feature_column(std::string_view column) {
  const auto first = column.find('_');
  if (first == std::string_view::npos || first == 0) return std::nullopt;
  const auto second = column.find('_', first + 1);
  if (second == std::string_view::npos || second + 1 >= column.size()) return std::nullopt;
  const auto cls = parse_class(column.substr(first + 1, second - first - 1));
  if (!cls) return std::nullopt;
  const auto name = column.substr(second + 1);
  for (char c : name) {
    if (!std::isalnum(static_cast<unsigned char>(c))) return std::nullopt;
  }
  return FeatureKey{std::string(column.substr(0, first)), *cls, std::string(name)};
}

const std::vector<std::string>& general_info_columns() {
  static const std::vector<std::string> k{"BoundingBox", "EnabledImageTypes", "GeneralSettings",
                                          "ImageHash",   "ImageSpacing",      "MaskHash",
                                          "Version",     "VolumeNum",         "VoxelNum"};
  return k;
}

const std::vector<std::string>& meta_columns() {
  static const std::vector<std::string> k{"study", "series", "canonicalType", "segmentedStructure"};
  return k;
}

int FeatureRecord::timepoint() const {
  std::size_t i = series.size();
  while (i > 0 && std::isdigit(static_cast<unsigned char>(series[i - 1]))) --i;
  if (i == series.size()) return 0;
  return std::stoi(series.substr(i));
}

std::string series_label(int timepoint) { return "TP" + std::to_string(timepoint); }

std::string validate_header(const std::vector<std::string>& header) {
  const auto& meta = meta_columns();
  if (header.size() < meta.size()) return "header shorter than the meta block";
  std::size_t i = 0;
  while (i < header.size() && header[i].rfind(kGeneralPrefix, 0) == 0) {
    if (header[i].size() == kGeneralPrefix.size()) return "empty general_info column name";
    ++i;
  }
  if (i == 0) return "no general_info_ columns";
  const std::size_t meta_start = header.size() - meta.size();
  if (i > meta_start) return "general_info_ columns overlap the meta block";
  for (std::size_t m = 0; m < meta.size(); ++m) {
    if (header[meta_start + m] != meta[m]) return "expected meta column '" + meta[m] + "' at position " + std::to_string(meta_start + m);
  }
  for (; i < meta_start; ++i) {
    if (!parse_feature_column(header[i])) return "column '" + header[i] + "' does not match [filter]_[class]_[name]";
  }
  return {};
}

std::vector<std::string> record_header(const std::vector<std::string>& feature_columns) {
  std::vector<std::string> header;
  for (const auto& g : general_info_columns()) header.push_back(std::string(kGeneralPrefix) + g);
  header.insert(header.end(), feature_columns.begin(), feature_columns.end());
  header.insert(header.end(), meta_columns().begin(), meta_columns().end());
  return header;
}

void write_records(const std::filesystem::path& path, const std::vector<std::string>& feature_columns,
                   const std::vector<FeatureRecord>& records) {
  std::vector<csv::Row> rows;
  rows.push_back(record_header(feature_columns));
  for (const auto& rec : records) {
    csv::Row row;
    std::map<std::string, std::string> info(rec.generalInfo.begin(), rec.generalInfo.end());
    for (const auto& g : general_info_columns()) row.push_back(info.count(g) ? info[g] : std::string());
    std::map<std::string, FeatureValue> values(rec.features.begin(), rec.features.end());
    for (const auto& c : feature_columns) {
      const auto it = values.find(c);
      row.push_back(it == values.end() ? std::string() : csv::format_optional(it->second));
    }
    row.push_back(rec.study);
    row.push_back(rec.series);
    row.push_back(rec.canonicalType);
    row.push_back(rec.segmentedStructure);
    rows.push_back(std::move(row));
  }
  csv::write_file(path, rows);
}

std::vector<FeatureRecord> read_records(const std::filesystem::path& path) {
  const auto rows = csv::read_file(path);
  if (rows.empty()) throw Error(ErrorCode::SchemaMismatch, path.string() + " is empty");
  const auto& header = rows.front();
  if (const auto problem = validate_header(header); !problem.empty()) {
    throw Error(ErrorCode::SchemaMismatch, path.string() + ": " + problem);
  }
  const std::size_t meta_start = header.size() - meta_columns().size();
  std::vector<FeatureRecord> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size()) {
      throw Error(ErrorCode::SchemaMismatch, path.string() + ": row " + std::to_string(r) + " has " +
                                                 std::to_string(row.size()) + " cells, header has " +
                                                 std::to_string(header.size()));
    }
    FeatureRecord rec;
    std::size_t c = 0;
    for (; header[c].rfind(kGeneralPrefix, 0) == 0; ++c) {
      rec.generalInfo.emplace_back(header[c].substr(kGeneralPrefix.size()), row[c]);
    }
    for (; c < meta_start; ++c) {
      const auto v = csv::parse_number(row[c]);
      if (!v && !row[c].empty()) {
        throw Error(ErrorCode::SchemaMismatch, path.string() + ": non-numeric cell in column " + header[c]);
      }
      rec.features.emplace_back(header[c], v);
    }
    rec.study = row[meta_start];
    rec.series = row[meta_start + 1];
    rec.canonicalType = row[meta_start + 2];
    rec.segmentedStructure = row[meta_start + 3];
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace radrep
