#include "radrep/repeatability.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "radrep/csv.hpp"
#include "radrep/error.hpp"

namespace radrep {

namespace {

std::set<FeatureKey> all_keys(const RepeatabilityTable& t) {
  std::set<FeatureKey> keys;
  for (const auto& [k, _] : t.rows) keys.insert(k);
  for (const auto& [k, _] : t.undefined) keys.insert(k);
  return keys;
}

/// Keys with a defined ICC in every table; throws when the tables were built
/// from different feature sets.
std::vector<FeatureKey> common_defined(std::span<const RepeatabilityTable> tables) {
  if (tables.size() < 2) throw Error(ErrorCode::FeatureSetMismatch, "need at least two tables");
  const auto keys = all_keys(tables.front());
  for (const auto& t : tables.subspan(1)) {
    if (all_keys(t) != keys) {
      throw Error(ErrorCode::FeatureSetMismatch, "tables " + tables.front().config.label() + " and " +
                                                     t.config.label() + " hold different features");
    }
  }
  std::vector<FeatureKey> out;
  for (const auto& k : keys) {
    if (std::all_of(tables.begin(), tables.end(), [&](const auto& t) { return t.rows.count(k) > 0; })) {
      out.push_back(k);
    }
  }
  return out;
}

double linear_quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

nlohmann::json key_json(const FeatureKey& k) {
  return {{"filter", k.filter}, {"featureClass", std::string(class_name(k.cls))}, {"featureName", k.name}};
}

}  // namespace

IccResult icc_1_1(std::span<const PairedMeasurement> data) {
  const std::size_t n = data.size();
  if (n < 3) throw Error(ErrorCode::InsufficientSubjects, "ICC needs at least 3 subjects, got " + std::to_string(n));
  double grand = 0.0;
  for (const auto& m : data) grand += m.first + m.second;
  grand /= 2.0 * static_cast<double>(n);

  double between = 0.0;
  double within = 0.0;
  for (const auto& m : data) {
    const double subject_mean = 0.5 * (m.first + m.second);
    between += (subject_mean - grand) * (subject_mean - grand);
    within += (m.first - subject_mean) * (m.first - subject_mean) + (m.second - subject_mean) * (m.second - subject_mean);
  }
  IccResult r;
  r.n = n;
  r.bms = 2.0 * between / static_cast<double>(n - 1);
  r.wms = within / static_cast<double>(n);
  if (!(r.bms + r.wms > 0.0)) throw Error(ErrorCode::DegenerateData, "all measurements are identical");
  r.icc = (r.bms - r.wms) / (r.bms + r.wms);
  return r;
}

std::string ConfigKey::label() const {
  return imageType + "/" + structure + "/" + normalization + "/bin" + csv::format_number(binWidth) + "/" +
         dimensionality + (registered ? "/registered" : "");
}

bool RepeatabilityTable::above_reference(const FeatureKey& key) const {
  const auto it = rows.find(key);
  return it != rows.end() && it->second.icc > volumeReference.icc;
}

RepeatabilityTable build_table(std::span<const FeatureRecord> records, const ConfigKey& config,
                               const std::string& reference) {
  const auto ref_key = parse_feature_column(reference);
  if (!ref_key) throw Error(ErrorCode::SchemaMismatch, "reference '" + reference + "' is not a feature column");

  std::map<std::string, std::array<const FeatureRecord*, 2>> subjects;
  for (const auto& rec : records) {
    if (rec.canonicalType != config.imageType || rec.segmentedStructure != config.structure) continue;
    const int tp = rec.timepoint();
    if (tp != 1 && tp != 2) throw Error(ErrorCode::SchemaMismatch, "series '" + rec.series + "' names no timepoint 1/2");
    auto& slot = subjects[rec.study][static_cast<std::size_t>(tp - 1)];
    if (slot) throw Error(ErrorCode::SchemaMismatch, "duplicate row for " + rec.study + " " + rec.series);
    slot = &rec;
  }
  std::erase_if(subjects, [](const auto& kv) { return !kv.second[0] || !kv.second[1]; });
  if (subjects.size() < 3) {
    throw Error(ErrorCode::InsufficientSubjects, config.label() + ": " + std::to_string(subjects.size()) +
                                                     " subjects with both timepoints");
  }

  // column -> subject -> per-timepoint value
  std::map<FeatureKey, std::map<std::string, std::array<FeatureValue, 2>>> values;
  for (const auto& [subject, pair] : subjects) {
    for (std::size_t t = 0; t < 2; ++t) {
      for (const auto& [column, value] : pair[t]->features) {
        const auto key = parse_feature_column(column);
        if (!key) throw Error(ErrorCode::SchemaMismatch, "column '" + column + "' does not match the naming grammar");
        values[*key][subject][t] = value;
      }
    }
  }

  RepeatabilityTable table;
  table.config = config;
  table.referenceKey = *ref_key;
  for (const auto& [key, per_subject] : values) {
    std::vector<PairedMeasurement> pairs;
    for (const auto& [subject, v] : per_subject) {
      if (v[0] && v[1]) pairs.push_back({subject, *v[0], *v[1]});
    }
    if (pairs.size() < 3) {
      table.undefined[key] = {"InsufficientSubjects", pairs.size()};
      continue;
    }
    try {
      table.rows[key] = icc_1_1(pairs);
    } catch (const Error& e) {
      table.undefined[key] = {std::string(error_name(e.code())), pairs.size()};
    }
  }

  const auto ref = table.rows.find(*ref_key);
  if (ref == table.rows.end()) {
    throw Error(ErrorCode::MissingVolumeReference, config.label() + " has no defined ICC for " + reference);
  }
  table.volumeReference = ref->second;
  return table;
}

std::map<FeatureKey, double> binwidth_spread(std::span<const RepeatabilityTable> tables) {
  std::map<FeatureKey, double> out;
  for (const auto& key : common_defined(tables)) {
    double lo = 2.0, hi = -2.0;
    for (const auto& t : tables) {
      const double icc = t.rows.at(key).icc;
      lo = std::min(lo, icc);
      hi = std::max(hi, icc);
    }
    out[key] = hi - lo;
  }
  return out;
}

double silverman_bandwidth(std::span<const double> samples) {
  const std::size_t n = samples.size();
  if (n < 2) throw Error(ErrorCode::DegenerateSamples, "KDE needs at least two samples");
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 0.0)) throw Error(ErrorCode::DegenerateSamples, "KDE samples have zero variance");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr = linear_quantile(sorted, 0.75) - linear_quantile(sorted, 0.25);
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

DensityCurve kde(std::span<const double> samples, std::optional<double> bandwidth) {
  const double h = bandwidth ? *bandwidth : silverman_bandwidth(samples);
  if (samples.size() < 2 || !(h > 0.0)) throw Error(ErrorCode::DegenerateSamples, "KDE needs samples and a positive bandwidth");
  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  const double lo = *lo_it - 3.0 * h;
  const double hi = *hi_it + 3.0 * h;
  constexpr std::size_t kPoints = 256;
  DensityCurve c;
  c.bandwidth = h;
  c.abscissa.resize(kPoints);
  c.density.resize(kPoints);
  const double norm = 1.0 / (static_cast<double>(samples.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t i = 0; i < kPoints; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(kPoints - 1);
    double acc = 0.0;
    for (double s : samples) {
      const double u = (x - s) / h;
      acc += std::exp(-0.5 * u * u);
    }
    c.abscissa[i] = x;
    c.density[i] = acc * norm;
  }
  return c;
}

RankHistogram rank_distribution(std::span<const RepeatabilityTable> tables) {
  const auto keys = common_defined(tables);
  std::set<double> widths;
  for (const auto& t : tables) widths.insert(t.config.binWidth);
  if (widths.size() != tables.size()) throw Error(ErrorCode::FeatureSetMismatch, "bin widths must be distinct");

  RankHistogram hist;
  for (double w : widths) hist[w];
  for (const auto& key : keys) {
    std::vector<std::pair<double, double>> scored;  // (icc, binWidth)
    for (const auto& t : tables) scored.emplace_back(t.rows.at(key).icc, t.config.binWidth);
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; i < scored.size();) {
      std::size_t j = i;
      while (j + 1 < scored.size() && scored[j + 1].first == scored[i].first) ++j;
      const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t m = i; m <= j; ++m) ++hist[scored[m].second][rank];
      i = j + 1;
    }
  }
  return hist;
}

std::map<FeatureClass, std::vector<TopFeature>> top_k_per_class(const RepeatabilityTable& table, std::size_t k,
                                                                TopKStatistic stat) {
  std::map<FeatureId, TopFeature> grouped;
  for (const auto& [key, r] : table.rows) {
    auto& tf = grouped[key.id()];
    tf.id = key.id();
    tf.perFilter[key.filter] = r.icc;
  }
  for (const auto& [key, _] : table.undefined) {
    grouped.try_emplace(key.id(), TopFeature{key.id(), 0.0, 0.0, 0.0, {}, {}});
  }

  std::map<FeatureClass, std::vector<TopFeature>> candidates;
  std::set<FeatureClass> classes;
  for (auto& [id, tf] : grouped) {
    classes.insert(id.cls);
    if (tf.perFilter.empty()) continue;
    std::vector<double> iccs;
    for (const auto& [filter, icc] : tf.perFilter) iccs.push_back(icc);
    std::sort(iccs.begin(), iccs.end());
    tf.minIcc = iccs.front();
    tf.maxIcc = iccs.back();
    tf.bestFilter = std::max_element(tf.perFilter.begin(), tf.perFilter.end(), [](const auto& a, const auto& b) {
                      return a.second < b.second;
                    })->first;
    switch (stat) {
      case TopKStatistic::MaxOverFilters: tf.score = tf.maxIcc; break;
      case TopKStatistic::MedianOverFilters: {
        const std::size_t m = iccs.size();
        tf.score = m % 2 ? iccs[m / 2] : 0.5 * (iccs[m / 2 - 1] + iccs[m / 2]);
        break;
      }
      case TopKStatistic::Unfiltered: {
        const auto it = tf.perFilter.find("original");
        if (it == tf.perFilter.end()) continue;
        tf.score = it->second;
        break;
      }
    }
    candidates[id.cls].push_back(tf);
  }

  std::map<FeatureClass, std::vector<TopFeature>> out;
  for (FeatureClass cls : classes) {
    auto& list = candidates[cls];
    if (list.size() < k) {
      throw Error(ErrorCode::InsufficientFeatures, std::string(class_name(cls)) + " has " + std::to_string(list.size()) +
                                                       " features with a defined ICC, need " + std::to_string(k));
    }
    std::sort(list.begin(), list.end(), [](const TopFeature& a, const TopFeature& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.id.name < b.id.name;
    });
    list.resize(k);
    out[cls] = std::move(list);
  }
  return out;
}

FilterFrequency filter_frequency(const RepeatabilityTable& table) {
  FilterFrequency f;
  f.reference = table.volumeReference.icc;
  std::set<FeatureId> above;
  for (const auto& [key, _] : table.undefined) f.counts.try_emplace(key.filter, 0);
  for (const auto& [key, r] : table.rows) {
    auto& count = f.counts[key.filter];
    if (r.icc > f.reference) {
      ++count;
      above.insert(key.id());
    }
  }
  f.totalAboveReference = above.size();
  return f;
}

DeltaReport config_delta(const RepeatabilityTable& a, const RepeatabilityTable& b) {
  DeltaReport d;
  for (const auto& [key, ra] : a.rows) {
    const auto it = b.rows.find(key);
    if (it == b.rows.end()) {
      d.onlyInA.push_back(key);
    } else {
      d.shared[key] = {ra.icc, it->second.icc, it->second.icc - ra.icc};
    }
  }
  for (const auto& [key, _] : b.rows) {
    if (!a.rows.count(key)) d.onlyInB.push_back(key);
  }
  if (d.shared.empty()) throw Error(ErrorCode::NoSharedFeatures, a.config.label() + " vs " + b.config.label());
  return d;
}

void write_table_csv(const std::filesystem::path& path, const RepeatabilityTable& table) {
  std::vector<csv::Row> rows{{"featureClass", "featureName", "filter", "binWidth", "icc", "bms", "wms", "n",
                              "aboveVolumeReference"}};
  std::set<FeatureKey> keys = all_keys(table);
  for (const auto& key : keys) {
    const std::string bw = csv::format_number(table.config.binWidth);
    if (const auto it = table.rows.find(key); it != table.rows.end()) {
      const auto& r = it->second;
      rows.push_back({std::string(class_name(key.cls)), key.name, key.filter, bw, csv::format_number(r.icc),
                      csv::format_number(r.bms), csv::format_number(r.wms), std::to_string(r.n),
                      table.above_reference(key) ? "1" : "0"});
    } else {
      rows.push_back({std::string(class_name(key.cls)), key.name, key.filter, bw, "", "", "",
                      std::to_string(table.undefined.at(key).n), "0"});
    }
  }
  csv::write_file(path, rows);
}

RepeatabilityTable read_table_csv(const std::filesystem::path& path, const ConfigKey& config,
                                  const std::string& reference) {
  const auto rows = csv::read_file(path);
  if (rows.empty() || rows.front().size() != 9 || rows.front()[0] != "featureClass") {
    throw Error(ErrorCode::SchemaMismatch, path.string() + " is not an ICC table");
  }
  RepeatabilityTable t;
  t.config = config;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != 9) throw Error(ErrorCode::SchemaMismatch, path.string() + ": malformed row " + std::to_string(i));
    const auto cls = parse_class(r[0]);
    if (!cls) throw Error(ErrorCode::SchemaMismatch, path.string() + ": unknown class " + r[0]);
    FeatureKey key{r[2], *cls, r[1]};
    const std::size_t n = r[7].empty() ? 0 : std::stoul(r[7]);
    const auto icc = csv::parse_number(r[4]);
    if (icc) {
      t.rows[key] = {*icc, csv::parse_number(r[5]).value_or(0.0), csv::parse_number(r[6]).value_or(0.0), n};
    } else {
      t.undefined[key] = {"Undefined", n};
    }
  }
  const auto ref_key = parse_feature_column(reference);
  if (!ref_key || !t.rows.count(*ref_key)) {
    throw Error(ErrorCode::MissingVolumeReference, path.string() + " lacks " + reference);
  }
  t.referenceKey = *ref_key;
  t.volumeReference = t.rows.at(*ref_key);
  return t;
}

void write_density_csv(const std::filesystem::path& path, const DensityCurve& curve) {
  std::vector<csv::Row> rows{{"x", "density"}};
  for (std::size_t i = 0; i < curve.abscissa.size(); ++i) {
    rows.push_back({csv::format_number(curve.abscissa[i]), csv::format_number(curve.density[i])});
  }
  csv::write_file(path, rows);
}

void write_spread_csv(const std::filesystem::path& path, const std::map<FeatureKey, double>& spread) {
  std::vector<csv::Row> rows{{"featureClass", "featureName", "filter", "maxIccDifference"}};
  for (const auto& [key, v] : spread) {
    rows.push_back({std::string(class_name(key.cls)), key.name, key.filter, csv::format_number(v)});
  }
  csv::write_file(path, rows);
}

void write_rank_csv(const std::filesystem::path& path, const RankHistogram& hist) {
  std::vector<csv::Row> rows{{"binWidth", "rank", "count"}};
  for (const auto& [bw, ranks] : hist) {
    for (const auto& [rank, count] : ranks) {
      rows.push_back({csv::format_number(bw), csv::format_number(rank), std::to_string(count)});
    }
  }
  csv::write_file(path, rows);
}

nlohmann::json config_json(const ConfigKey& c) {
  return {{"imageType", c.imageType},         {"structure", c.structure},
          {"normalization", c.normalization}, {"binWidth", c.binWidth},
          {"dimensionality", c.dimensionality}, {"registered", c.registered}};
}

ConfigKey config_from_json(const nlohmann::json& j) {
  ConfigKey c;
  c.imageType = j.at("imageType").get<std::string>();
  c.structure = j.at("structure").get<std::string>();
  c.normalization = j.at("normalization").get<std::string>();
  c.binWidth = j.at("binWidth").get<double>();
  c.dimensionality = j.at("dimensionality").get<std::string>();
  c.registered = j.at("registered").get<bool>();
  return c;
}

nlohmann::json to_json(const std::map<FeatureClass, std::vector<TopFeature>>& top) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [cls, list] : top) {
    auto& arr = out[std::string(class_name(cls))] = nlohmann::json::array();
    for (const auto& tf : list) {
      arr.push_back({{"featureName", tf.id.name},
                     {"score", tf.score},
                     {"minIcc", tf.minIcc},
                     {"maxIcc", tf.maxIcc},
                     {"bestFilter", tf.bestFilter},
                     {"perFilter", tf.perFilter}});
    }
  }
  return out;
}

nlohmann::json to_json(const FilterFrequency& f) {
  return {{"volumeReferenceIcc", f.reference}, {"counts", f.counts}, {"totalAboveReference", f.totalAboveReference}};
}

nlohmann::json to_json(const DeltaReport& d) {
  nlohmann::json shared = nlohmann::json::array();
  for (const auto& [key, e] : d.shared) {
    auto j = key_json(key);
    j["iccA"] = e.iccA;
    j["iccB"] = e.iccB;
    j["delta"] = e.delta;
    shared.push_back(std::move(j));
  }
  nlohmann::json only_a = nlohmann::json::array();
  nlohmann::json only_b = nlohmann::json::array();
  for (const auto& k : d.onlyInA) only_a.push_back(key_json(k));
  for (const auto& k : d.onlyInB) only_b.push_back(key_json(k));
  return {{"shared", shared}, {"onlyInA", only_a}, {"onlyInB", only_b}};
}

}  // namespace radrep
