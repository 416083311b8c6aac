#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "radrep/records.hpp"

namespace radrep {

struct PairedMeasurement {
  std::string subjectId;
  double first = 0.0;
  double second = 0.0;
};

struct IccResult {
  double icc = 0.0;
  double bms = 0.0;
  double wms = 0.0;
  std::size_t n = 0;
};

/// One-way random-effects ICC(1,1) for two timepoints:
/// (BMS - WMS) / (BMS + WMS). Needs n >= 3 and non-identical data.
IccResult icc_1_1(std::span<const PairedMeasurement> data);

/// Everything that identifies one extraction configuration except the filter,
/// which is part of each row key.
struct ConfigKey {
  std::string imageType;
  std::string structure;
  std::string normalization;  // none | wholeImage | referenceRegion
  double binWidth = 0.0;
  std::string dimensionality;  // 2D | 3D
  bool registered = false;

  std::string label() const;
  friend auto operator<=>(const ConfigKey&, const ConfigKey&) = default;
};

struct UndefinedIcc {
  std::string reason;
  std::size_t n = 0;
};

struct RepeatabilityTable {
  ConfigKey config;
  std::map<FeatureKey, IccResult> rows;
  /// Features whose ICC could not be computed, with the retained subject count.
  std::map<FeatureKey, UndefinedIcc> undefined;
  FeatureKey referenceKey;
  IccResult volumeReference;

  bool above_reference(const FeatureKey& key) const;
};

inline constexpr const char* kDefaultReference = "original_shape_Volume";

/// Groups records of config.imageType / config.structure by subject and
/// timepoint and computes one ICC per feature column. Subjects missing a
/// value for a feature are dropped for that feature only.
RepeatabilityTable build_table(std::span<const FeatureRecord> records, const ConfigKey& config,
                               const std::string& reference = kDefaultReference);

/// max(icc) - min(icc) per feature across bin widths.
std::map<FeatureKey, double> binwidth_spread(std::span<const RepeatabilityTable> tables);

struct DensityCurve {
  std::vector<double> abscissa;
  std::vector<double> density;
  double bandwidth = 0.0;
};

/// Gaussian KDE on a 256-point grid over [min - 3h, max + 3h]. The bandwidth
/// defaults to Silverman's rule 0.9 * min(sd, IQR / 1.34) * n^(-1/5).
DensityCurve kde(std::span<const double> samples, std::optional<double> bandwidth = std::nullopt);
double silverman_bandwidth(std::span<const double> samples);

/// binWidth -> (rank -> feature count). Ranks are 1 for the highest ICC; ties
/// share the average rank.
using RankHistogram = std::map<double, std::map<double, std::size_t>>;
RankHistogram rank_distribution(std::span<const RepeatabilityTable> tables);

enum class TopKStatistic { MaxOverFilters, MedianOverFilters, Unfiltered };

struct TopFeature {
  FeatureId id;
  double score = 0.0;
  double minIcc = 0.0;
  double maxIcc = 0.0;
  std::string bestFilter;
  std::map<std::string, double> perFilter;
};

/// Per class, the k features with the highest score; ties go to the
/// lexicographically smaller name.
std::map<FeatureClass, std::vector<TopFeature>> top_k_per_class(const RepeatabilityTable& table, std::size_t k = 3,
                                                                TopKStatistic stat = TopKStatistic::MaxOverFilters);

struct FilterFrequency {
  double reference = 0.0;
  std::map<std::string, std::size_t> counts;
  std::size_t totalAboveReference = 0;
};

FilterFrequency filter_frequency(const RepeatabilityTable& table);

struct DeltaEntry {
  double iccA = 0.0;
  double iccB = 0.0;
  double delta = 0.0;
};

struct DeltaReport {
  std::map<FeatureKey, DeltaEntry> shared;
  std::vector<FeatureKey> onlyInA;
  std::vector<FeatureKey> onlyInB;
};

DeltaReport config_delta(const RepeatabilityTable& a, const RepeatabilityTable& b);

// Report emission.
void write_table_csv(const std::filesystem::path& path, const RepeatabilityTable& table);
RepeatabilityTable read_table_csv(const std::filesystem::path& path, const ConfigKey& config,
                                  const std::string& reference = kDefaultReference);
void write_density_csv(const std::filesystem::path& path, const DensityCurve& curve);
void write_spread_csv(const std::filesystem::path& path, const std::map<FeatureKey, double>& spread);
void write_rank_csv(const std::filesystem::path& path, const RankHistogram& hist);

nlohmann::json config_json(const ConfigKey& config);
ConfigKey config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const std::map<FeatureClass, std::vector<TopFeature>>& top);
nlohmann::json to_json(const FilterFrequency& freq);
nlohmann::json to_json(const DeltaReport& delta);

}  // namespace radrep
