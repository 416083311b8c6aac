#include "radrep/pipeline.hpp"

#include <glob.h>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "radrep/csv.hpp"
#include "radrep/error.hpp"
#include "radrep/version.hpp"

namespace radrep {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view image_type_code(ImageType t) noexcept {
  switch (t) {
    case ImageType::T2AX: return "T2AX";
    case ImageType::ADC: return "ADC";
    case ImageType::SUB: return "SUB";
  }
  return "";
}

std::string_view canonical_type_name(ImageType t) noexcept {
  switch (t) {
    case ImageType::T2AX: return "T2w";
    case ImageType::ADC: return "ADC";
    case ImageType::SUB: return "SUB";
  }
  return "";
}

ImageType parse_image_type(std::string_view code) {
  if (code == "T2AX" || code == "T2w") return ImageType::T2AX;
  if (code == "ADC") return ImageType::ADC;
  if (code == "SUB") return ImageType::SUB;
  throw Error(ErrorCode::InvalidManifest, "unknown image type '" + std::string(code) + "'");
}

std::string_view normalization_name(NormalizationMode m) noexcept {
  switch (m) {
    case NormalizationMode::None: return "none";
    case NormalizationMode::WholeImage: return "wholeImage";
    case NormalizationMode::ReferenceRegion: return "referenceRegion";
  }
  return "";
}

NormalizationMode parse_normalization(std::string_view name) {
  if (name == "none" || name == "noNormalization") return NormalizationMode::None;
  if (name == "wholeImage") return NormalizationMode::WholeImage;
  if (name == "referenceRegion" || name == "MuscleRefNorm") return NormalizationMode::ReferenceRegion;
  throw Error(ErrorCode::InvalidManifest, "unknown normalization mode '" + std::string(name) + "'");
}

std::string_view dimensionality_name(Dimensionality d) noexcept { return d == Dimensionality::TwoD ? "2D" : "3D"; }

namespace {

Dimensionality parse_dimensionality(std::string_view s) {
  if (s == "2D" || s == "2d") return Dimensionality::TwoD;
  if (s == "3D" || s == "3d") return Dimensionality::ThreeD;
  throw Error(ErrorCode::InvalidManifest, "unknown dimensionality '" + std::string(s) + "'");
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::string bin_code(double w) {
  std::string s = csv::format_number(w);
  return "bin" + s;
}

template <typename T>
std::vector<T> string_or_list(const json& j, const char* key, T (*parse)(std::string_view), std::vector<T> fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  std::vector<T> out;
  if (v.is_string()) {
    out.push_back(parse(v.get<std::string>()));
  } else if (v.is_array()) {
    for (const auto& e : v) out.push_back(parse(e.get<std::string>()));
  } else {
    throw Error(ErrorCode::InvalidManifest, std::string("settings.") + key + " must be a string or a list");
  }
  if (out.empty()) throw Error(ErrorCode::InvalidManifest, std::string("settings.") + key + " is empty");
  return out;
}

}  // namespace

RunManifest parse_manifest(const json& doc, const fs::path& base_dir) {
  RunManifest m;
  try {
    for (const auto& e : doc.at("cohort")) {
      CohortEntry c;
      c.subjectId = e.at("subjectId").get<std::string>();
      c.timepoint = e.at("timepoint").get<int>();
      if (c.timepoint != 1 && c.timepoint != 2) {
        throw Error(ErrorCode::InvalidManifest, c.subjectId + ": timepoint must be 1 or 2");
      }
      c.imageType = parse_image_type(e.at("imageType").get<std::string>());
      c.imagePath = resolve(base_dir, e.at("imagePath").get<std::string>());
      for (const auto& me : e.at("masks")) {
        MaskEntry mask;
        mask.structure = parse_structure(me.at("structure").get<std::string>());
        mask.path = resolve(base_dir, me.at("path").get<std::string>());
        if (me.contains("registeredPath")) mask.registeredPath = resolve(base_dir, me.at("registeredPath").get<std::string>());
        c.masks.push_back(std::move(mask));
      }
      if (e.contains("referenceMaskPath")) c.referenceMaskPath = resolve(base_dir, e.at("referenceMaskPath").get<std::string>());
      m.cohort.push_back(std::move(c));
    }
    const json settings = doc.value("settings", json::object());
    m.settings.normalizationModes =
        string_or_list<NormalizationMode>(settings, "normalizationModes", parse_normalization, {NormalizationMode::None});
    m.settings.dimensionalities =
        string_or_list<Dimensionality>(settings, "dimensionality", parse_dimensionality, {Dimensionality::TwoD});
    if (settings.contains("binWidths")) {
      m.settings.binWidths = settings.at("binWidths").get<std::vector<double>>();
      if (m.settings.binWidths.empty()) throw Error(ErrorCode::InvalidManifest, "settings.binWidths is empty");
      for (double w : m.settings.binWidths) {
        if (!(w > 0.0)) throw Error(ErrorCode::InvalidManifest, "bin widths must be positive");
      }
    }
    if (settings.contains("filters")) m.settings.filters = settings.at("filters").get<std::vector<std::string>>();
    m.settings.registeredMasks = settings.value("registeredMasks", false);
    m.settings.biasCorrected = settings.value("biasCorrected", false);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidManifest, e.what());
  }
  if (m.cohort.empty()) throw Error(ErrorCode::InvalidManifest, "cohort is empty");

  std::set<std::tuple<std::string, int, ImageType>> seen;
  for (const auto& c : m.cohort) {
    if (!seen.emplace(c.subjectId, c.timepoint, c.imageType).second) {
      throw Error(ErrorCode::InvalidManifest, "duplicate cohort entry for " + c.subjectId);
    }
  }
  for (const auto& c : m.cohort) {
    if (!seen.count({c.subjectId, 3 - c.timepoint, c.imageType})) {
      throw Error(ErrorCode::InvalidManifest, c.subjectId + " " + std::string(image_type_code(c.imageType)) +
                                                  " lacks timepoint " + std::to_string(3 - c.timepoint));
    }
  }
  for (const auto& dim : m.settings.dimensionalities) expand_filters(m.settings.filters, dim);
  return m;
}

RunManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidManifest, "cannot open manifest " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidManifest, path.string() + ": " + e.what());
  }
  return parse_manifest(doc, path.parent_path());
}

std::string extraction_filename(const ExtractionConfig& c) {
  std::vector<std::string> codes{"FullStudySettings"};
  if (c.normalization == NormalizationMode::None) codes.emplace_back("noNormalization");
  if (c.normalization == NormalizationMode::ReferenceRegion) codes.emplace_back("MuscleRefNorm");
  codes.emplace_back(dimensionality_name(c.dimensionality));
  if (c.biasCorrected) codes.emplace_back("biasCorrected");
  if (c.registered) codes.emplace_back("TP2Registered");
  codes.emplace_back(image_type_code(c.imageType));
  codes.push_back(bin_code(c.binWidth));
  std::string name;
  for (const auto& code : codes) name += (name.empty() ? "" : "_") + code;
  return name + ".csv";
}

ExtractionConfig parse_extraction_filename(const std::string& filename) {
  std::string stem = fs::path(filename).filename().string();
  if (stem.size() > 4 && stem.ends_with(".csv")) stem.resize(stem.size() - 4);
  ExtractionConfig c;
  c.normalization = NormalizationMode::WholeImage;
  bool have_dim = false, have_bin = false, have_type = false;
  std::size_t pos = 0;
  while (pos <= stem.size()) {
    const auto next = std::min(stem.find('_', pos), stem.size());
    const std::string tok = stem.substr(pos, next - pos);
    pos = next + 1;
    if (tok == "noNormalization") {
      c.normalization = NormalizationMode::None;
    } else if (tok == "MuscleRefNorm") {
      c.normalization = NormalizationMode::ReferenceRegion;
    } else if (tok == "2D" || tok == "2d" || tok == "3D" || tok == "3d") {
      c.dimensionality = parse_dimensionality(tok);
      have_dim = true;
    } else if (tok == "biasCorrected") {
      c.biasCorrected = true;
    } else if (tok == "TP2Registered") {
      c.registered = true;
    } else if (tok == "T2AX" || tok == "ADC" || tok == "SUB") {
      c.imageType = parse_image_type(tok);
      have_type = true;
    } else if (tok.rfind("bin", 0) == 0) {
      const auto w = csv::parse_number(std::string_view(tok).substr(3));
      if (!w || !(*w > 0.0)) throw Error(ErrorCode::SchemaMismatch, "bad bin code in " + filename);
      c.binWidth = *w;
      have_bin = true;
    }
  }
  if (!have_dim || !have_bin) throw Error(ErrorCode::SchemaMismatch, filename + " lacks the 2D/3D or binNN code");
  if (!have_type) c.imageType = ImageType::T2AX;
  return c;
}

std::vector<FilterSpec> expand_filters(const std::vector<std::string>& names, Dimensionality dim) {
  std::vector<FilterSpec> out;
  auto add = [&](const FilterSpec& f) {
    if (std::find(out.begin(), out.end(), f) == out.end()) out.push_back(f);
  };
  const bool three_d = dim == Dimensionality::ThreeD;
  for (const auto& name : names) {
    const bool all = name == "all";
    if (all) add(FilterSpec::original());
    if (all || name == "log") {
      for (double s : {1.0, 2.0, 3.0, 4.0, 5.0}) add(FilterSpec::log(s));
    }
    if (all || name == "wavelet") {
      for (const auto& band : wavelet_subbands(three_d)) add(FilterSpec::wavelet(band));
    }
    if (all) {
      for (auto k : {FilterKind::Square, FilterKind::SquareRoot, FilterKind::Logarithm, FilterKind::Exponential}) {
        add(FilterSpec::pointwise(k));
      }
    }
    if (!all && name != "log" && name != "wavelet") {
      try {
        add(parse_filter_name(name));
      } catch (const Error& e) {
        throw Error(ErrorCode::InvalidManifest, e.what());
      }
    }
  }
  if (out.empty()) throw Error(ErrorCode::InvalidManifest, "no filters configured");
  return out;
}

std::vector<std::string> feature_columns(const std::vector<FilterSpec>& filters) {
  std::vector<std::string> cols;
  for (const auto& n : feature_catalog(FeatureClass::Shape)) cols.push_back("original_shape_" + n);
  for (const auto& f : filters) {
    const std::string prefix = filter_name(f);
    for (auto cls : {FeatureClass::FirstOrder, FeatureClass::Glcm, FeatureClass::Glrlm, FeatureClass::Glszm}) {
      for (const auto& n : feature_catalog(cls)) cols.push_back(prefix + "_" + std::string(class_name(cls)) + "_" + n);
    }
  }
  return cols;
}

bool ExtractSummary::partial() const {
  return std::any_of(files.begin(), files.end(), [](const auto& f) { return !f.errors.empty(); });
}

namespace {

struct Cell {
  ExtractionConfig config;
  std::vector<FilterSpec> filters;
};

struct RowRef {
  std::size_t entry;
  std::size_t mask;
};

struct CellValue {
  std::size_t cell;
  std::size_t row;
  std::string column;
  FeatureValue value;
};

/// A failure scoped to one row; `cell` == npos applies to every cell of the
/// row's image type.
struct TaskError {
  std::size_t cell;
  std::size_t entry;
  std::size_t mask;
  std::string filter;
  std::string error;
  std::string message;
};

struct TaskOutput {
  std::vector<CellValue> values;
  std::vector<TaskError> errors;
  std::map<std::size_t, std::vector<std::pair<std::string, std::string>>> generalInfo;  // by mask index
  std::size_t diagnostics = 0;
};

constexpr std::size_t kAllCells = static_cast<std::size_t>(-1);

std::string bounding_box(const RoiMask& m) {
  std::array<std::size_t, 3> lo{m.dims[0], m.dims[1], m.dims[2]};
  std::array<std::size_t, 3> hi{0, 0, 0};
  for (std::size_t z = 0; z < m.dims[2]; ++z) {
    for (std::size_t y = 0; y < m.dims[1]; ++y) {
      for (std::size_t x = 0; x < m.dims[0]; ++x) {
        if (!m.inside(x, y, z)) continue;
        const std::array<std::size_t, 3> p{x, y, z};
        for (std::size_t a = 0; a < 3; ++a) {
          lo[a] = std::min(lo[a], p[a]);
          hi[a] = std::max(hi[a], p[a]);
        }
      }
    }
  }
  return "(" + std::to_string(lo[0]) + ", " + std::to_string(lo[1]) + ", " + std::to_string(lo[2]) + ", " +
         std::to_string(hi[0] - lo[0] + 1) + ", " + std::to_string(hi[1] - lo[1] + 1) + ", " +
         std::to_string(hi[2] - lo[2] + 1) + ")";
}

std::string spacing_text(const Spacing& s) {
  return "(" + csv::format_number(s[0]) + ", " + csv::format_number(s[1]) + ", " + csv::format_number(s[2]) + ")";
}

class Extractor {
 public:
  Extractor(const RunManifest& manifest, std::vector<Cell> cells)
      : manifest_(manifest), cells_(std::move(cells)) {}

  /// Loads the mask grids and emits shape features and general info.
  TaskOutput run_mask_task(std::size_t entry) const {
    TaskOutput out;
    const auto& e = manifest_.cohort[entry];
    std::optional<VolumeGrid> image;
    try {
      image = read_volume(e.imagePath);
    } catch (const Error& err) {
      fail_entry(out, entry, "", err);
      return out;
    }
    for (std::size_t mi = 0; mi < e.masks.size(); ++mi) {
      auto& info = out.generalInfo[mi];
      info.emplace_back("ImageHash", content_digest(*image));
      info.emplace_back("ImageSpacing", spacing_text(image->spacing));
      try {
        const RoiMask mask = load_mask(e, mi);
        if (!check_geometry(*image, mask)) throw Error(ErrorCode::GeometryMismatch, "mask grid differs from image grid");
        int components = 0;
        std::vector<int> labels(mask.labels.begin(), mask.labels.end());
        label_components(mask.dims, labels, neighbourhood(Dimensionality::ThreeD), components);
        info.emplace_back("BoundingBox", bounding_box(mask));
        info.emplace_back("MaskHash", content_digest(mask));
        info.emplace_back("VolumeNum", std::to_string(components));
        info.emplace_back("VoxelNum", std::to_string(mask.voxel_count()));
        for (const auto& [id, value] : shape_features(mask)) {
          const std::string column = "original_shape_" + id.name;
          for (std::size_t c = 0; c < cells_.size(); ++c) {
            if (cells_[c].config.imageType == e.imageType) out.values.push_back({c, mi, column, value});
          }
        }
      } catch (const Error& err) {
        out.errors.push_back({kAllCells, entry, mi, "", std::string(error_name(err.code())), err.what()});
      }
    }
    return out;
  }

  /// Applies one filter under every normalization mode and extracts the
  /// intensity and texture classes for every mask, bin width and
  /// dimensionality that lists the filter.
  TaskOutput run_filter_task(std::size_t entry, const FilterSpec& filter) const {
    TaskOutput out;
    const auto& e = manifest_.cohort[entry];
    const std::string fname = filter_name(filter);

    std::vector<std::size_t> cells;
    for (std::size_t c = 0; c < cells_.size(); ++c) {
      const auto& cell = cells_[c];
      if (cell.config.imageType != e.imageType) continue;
      if (std::find(cell.filters.begin(), cell.filters.end(), filter) == cell.filters.end()) continue;
      cells.push_back(c);
    }
    if (cells.empty()) return out;

    std::optional<VolumeGrid> image;
    try {
      image = read_volume(e.imagePath);
    } catch (const Error& err) {
      for (std::size_t c : cells) {
        for (std::size_t mi = 0; mi < e.masks.size(); ++mi) record(out, c, entry, mi, fname, err);
      }
      return out;
    }
    std::vector<std::optional<RoiMask>> masks(e.masks.size());
    for (std::size_t mi = 0; mi < e.masks.size(); ++mi) {
      try {
        masks[mi] = load_mask(e, mi);
      } catch (const Error&) {
        // reported once by the mask task
      }
    }

    for (NormalizationMode mode : manifest_.settings.normalizationModes) {
      std::vector<std::size_t> mode_cells;
      for (std::size_t c : cells) {
        if (cells_[c].config.normalization == mode) mode_cells.push_back(c);
      }
      if (mode_cells.empty()) continue;

      std::optional<VolumeGrid> filtered;
      try {
        NormalizationSpec spec;
        if (mode == NormalizationMode::WholeImage) spec = NormalizationSpec::whole_image();
        if (mode == NormalizationMode::ReferenceRegion) {
          if (!e.referenceMaskPath) throw Error(ErrorCode::MissingReferenceMask, e.subjectId + " has no referenceMaskPath");
          spec = NormalizationSpec::reference_region(read_mask(*e.referenceMaskPath, Structure::MuscleReference));
        }
        filtered = apply_filter(normalize(*image, spec), filter);
      } catch (const Error& err) {
        for (std::size_t c : mode_cells) {
          for (std::size_t mi = 0; mi < e.masks.size(); ++mi) record(out, c, entry, mi, fname, err);
        }
        continue;
      }

      for (std::size_t mi = 0; mi < e.masks.size(); ++mi) {
        if (!masks[mi] || !check_geometry(*filtered, *masks[mi])) continue;
        const RoiMask& mask = *masks[mi];
        for (std::size_t c : mode_cells) extract_cell(out, c, entry, mi, fname, *filtered, mask);
      }
    }
    return out;
  }

  const std::vector<Cell>& cells() const { return cells_; }

 private:
  RoiMask load_mask(const CohortEntry& e, std::size_t mi) const {
    const auto& m = e.masks[mi];
    const fs::path& path = manifest_.settings.registeredMasks && m.registeredPath ? *m.registeredPath : m.path;
    return read_mask(path, m.structure);
  }

  void fail_entry(TaskOutput& out, std::size_t entry, const std::string& filter, const Error& err) const {
    for (std::size_t mi = 0; mi < manifest_.cohort[entry].masks.size(); ++mi) {
      out.errors.push_back({kAllCells, entry, mi, filter, std::string(error_name(err.code())), err.what()});
    }
  }

  static void record(TaskOutput& out, std::size_t cell, std::size_t entry, std::size_t mask, const std::string& filter,
                     const Error& err) {
    out.errors.push_back({cell, entry, mask, filter, std::string(error_name(err.code())), err.what()});
  }

  void extract_cell(TaskOutput& out, std::size_t c, std::size_t entry, std::size_t mi, const std::string& fname,
                    const VolumeGrid& filtered, const RoiMask& mask) const {
    const auto& cfg = cells_[c].config;
    const DiscretizationSpec spec{cfg.binWidth};
    auto emit = [&](const FeatureMap& fm) {
      for (const auto& [id, value] : fm) {
        out.values.push_back({c, mi, fname + "_" + std::string(class_name(id.cls)) + "_" + id.name, value});
      }
    };
    try {
      emit(firstorder_features(filtered, mask, spec));
    } catch (const Error& err) {
      record(out, c, entry, mi, fname, err);
    }
    std::optional<DiscretizedRoi> disc;
    try {
      disc = discretize_roi(filtered, mask, spec);
      if (!disc->diagnostic.empty()) ++out.diagnostics;
    } catch (const Error& err) {
      record(out, c, entry, mi, fname, err);
      return;
    }
    const Dimensionality dim = cfg.dimensionality;
    try {
      emit(glcm_features(build_glcm(*disc, dim)));
    } catch (const Error& err) {
      record(out, c, entry, mi, fname, err);
    }
    try {
      emit(glrlm_features(build_glrlm(*disc, dim)));
    } catch (const Error& err) {
      record(out, c, entry, mi, fname, err);
    }
    try {
      emit(glszm_features(build_glszm(*disc, dim)));
    } catch (const Error& err) {
      record(out, c, entry, mi, fname, err);
    }
  }

  const RunManifest& manifest_;
  std::vector<Cell> cells_;
};

template <typename Fn>
void parallel_for(std::size_t count, unsigned jobs, Fn&& fn) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) fn(i);
  };
  if (jobs == 1) {
    worker();
    return;
  }
  std::vector<std::jthread> pool;
  for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
}

json general_settings(const ExtractionConfig& c) {
  json s = {{"normalization", std::string(normalization_name(c.normalization))},
            {"binWidth", c.binWidth},
            {"textureDimensionality", std::string(dimensionality_name(c.dimensionality))},
            {"registeredMasks", c.registered},
            {"biasCorrected", c.biasCorrected},
            {"glcmDistance", 1}};
  if (c.normalization == NormalizationMode::WholeImage) {
    s["targetMean"] = 300.0;
    s["targetStd"] = 100.0;
  } else if (c.normalization == NormalizationMode::ReferenceRegion) {
    s["targetMean"] = 100.0;
    s["targetStd"] = 10.0;
  }
  return s;
}

}  // namespace

ExtractSummary run_extract(const RunManifest& manifest, const fs::path& out_dir, unsigned jobs) {
  fs::create_directories(out_dir);

  std::set<ImageType> types;
  for (const auto& e : manifest.cohort) types.insert(e.imageType);
  std::vector<Cell> cells;
  for (ImageType t : types) {
    for (auto mode : manifest.settings.normalizationModes) {
      for (auto dim : manifest.settings.dimensionalities) {
        for (double bw : manifest.settings.binWidths) {
          Cell cell;
          cell.config = {mode, bw, dim, manifest.settings.registeredMasks, manifest.settings.biasCorrected, t};
          cell.filters = expand_filters(manifest.settings.filters, dim);
          cells.push_back(std::move(cell));
        }
      }
    }
  }

  std::vector<FilterSpec> all_filters;
  for (const auto& cell : cells) {
    for (const auto& f : cell.filters) {
      if (std::find(all_filters.begin(), all_filters.end(), f) == all_filters.end()) all_filters.push_back(f);
    }
  }

  const Extractor extractor(manifest, cells);
  const std::size_t entries = manifest.cohort.size();
  const std::size_t per_entry = all_filters.size() + 1;
  std::vector<TaskOutput> outputs(entries * per_entry);
  parallel_for(outputs.size(), jobs, [&](std::size_t task) {
    const std::size_t entry = task / per_entry;
    const std::size_t slot = task % per_entry;
    try {
      outputs[task] = slot == 0 ? extractor.run_mask_task(entry) : extractor.run_filter_task(entry, all_filters[slot - 1]);
    } catch (const std::exception& ex) {
      auto& out = outputs[task];
      const std::string filter = slot == 0 ? "" : filter_name(all_filters[slot - 1]);
      for (std::size_t mi = 0; mi < manifest.cohort[entry].masks.size(); ++mi) {
        out.errors.push_back({kAllCells, entry, mi, filter, "InternalError", ex.what()});
      }
    }
  });

  // Rows per image type, ordered by (study, series, structure).
  std::map<ImageType, std::vector<RowRef>> rows;
  for (std::size_t e = 0; e < entries; ++e) {
    for (std::size_t m = 0; m < manifest.cohort[e].masks.size(); ++m) rows[manifest.cohort[e].imageType].push_back({e, m});
  }
  for (auto& [t, list] : rows) {
    std::sort(list.begin(), list.end(), [&](const RowRef& a, const RowRef& b) {
      const auto& ea = manifest.cohort[a.entry];
      const auto& eb = manifest.cohort[b.entry];
      return std::make_tuple(ea.subjectId, series_label(ea.timepoint), structure_name(ea.masks[a.mask].structure)) <
             std::make_tuple(eb.subjectId, series_label(eb.timepoint), structure_name(eb.masks[b.mask].structure));
    });
  }

  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::pair<std::string, std::string>>> info;
  std::vector<std::map<std::pair<std::size_t, std::size_t>, std::map<std::string, FeatureValue>>> values(cells.size());
  std::vector<std::vector<ExtractError>> errors(cells.size());
  ExtractSummary summary;
  for (std::size_t task = 0; task < outputs.size(); ++task) {
    auto& out = outputs[task];
    const std::size_t entry = task / per_entry;
    summary.diagnostics += out.diagnostics;
    for (auto& [mask, gi] : out.generalInfo) info[{entry, mask}] = std::move(gi);
    for (auto& v : out.values) values[v.cell][{entry, v.row}][v.column] = v.value;
    for (auto& err : out.errors) {
      const auto& e = manifest.cohort[err.entry];
      const ExtractError rec{e.subjectId, e.timepoint, std::string(structure_name(e.masks[err.mask].structure)),
                             err.filter, err.error, err.message};
      if (err.cell == kAllCells) {
        for (std::size_t c = 0; c < cells.size(); ++c) {
          if (cells[c].config.imageType == e.imageType) errors[c].push_back(rec);
        }
      } else {
        errors[err.cell].push_back(rec);
      }
    }
  }

  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto& cfg = cells[c].config;
    const auto columns = feature_columns(cells[c].filters);
    json enabled = json::array();
    for (const auto& f : cells[c].filters) enabled.push_back(filter_name(f));

    std::vector<FeatureRecord> records;
    for (const RowRef& r : rows[cfg.imageType]) {
      const auto& e = manifest.cohort[r.entry];
      FeatureRecord rec;
      std::map<std::string, std::string> gi;
      if (const auto it = info.find({r.entry, r.mask}); it != info.end()) gi.insert(it->second.begin(), it->second.end());
      gi["EnabledImageTypes"] = enabled.dump();
      gi["GeneralSettings"] = general_settings(cfg).dump();
      gi["Version"] = std::string("radrep ") + kVersion;
      for (const auto& name : general_info_columns()) rec.generalInfo.emplace_back(name, gi.count(name) ? gi[name] : "");
      const auto& vals = values[c][{r.entry, r.mask}];
      for (const auto& col : columns) {
        const auto it = vals.find(col);
        rec.features.emplace_back(col, it == vals.end() ? FeatureValue{} : it->second);
      }
      rec.study = e.subjectId;
      rec.series = series_label(e.timepoint);
      rec.canonicalType = std::string(canonical_type_name(e.imageType));
      rec.segmentedStructure = std::string(structure_name(e.masks[r.mask].structure));
      records.push_back(std::move(rec));
    }

    ExtractOutput file;
    file.csv = out_dir / extraction_filename(cfg);
    file.rows = records.size();
    write_records(file.csv, columns, records);

    auto& errs = errors[c];
    std::sort(errs.begin(), errs.end(), [](const ExtractError& a, const ExtractError& b) {
      return std::tie(a.subjectId, a.timepoint, a.structure, a.filter, a.error, a.message) <
             std::tie(b.subjectId, b.timepoint, b.structure, b.filter, b.error, b.message);
    });
    errs.erase(std::unique(errs.begin(), errs.end(), [](const ExtractError& a, const ExtractError& b) {
                 return std::tie(a.subjectId, a.timepoint, a.structure, a.filter, a.error, a.message) ==
                        std::tie(b.subjectId, b.timepoint, b.structure, b.filter, b.error, b.message);
               }),
               errs.end());
    fs::path sidecar = file.csv;
    sidecar.replace_extension(".errors.csv");
    if (!errs.empty()) {
      std::vector<csv::Row> rows_out{{"subjectId", "timepoint", "structure", "filter", "error", "message"}};
      for (const auto& err : errs) {
        rows_out.push_back({err.subjectId, std::to_string(err.timepoint), err.structure, err.filter, err.error, err.message});
      }
      csv::write_file(sidecar, rows_out);
    } else {
      fs::remove(sidecar);
    }
    file.errors = std::move(errs);
    summary.files.push_back(std::move(file));
  }
  return summary;
}

std::vector<fs::path> resolve_inputs(const std::vector<std::string>& patterns) {
  std::set<fs::path> out;
  auto is_table = [](const fs::path& p) {
    const auto name = p.filename().string();
    return p.extension() == ".csv" && !name.ends_with(".errors.csv");
  };
  for (const auto& pat : patterns) {
    if (pat.find_first_of("*?[") != std::string::npos) {
      glob_t g{};
      if (::glob(pat.c_str(), 0, nullptr, &g) == 0) {
        for (std::size_t i = 0; i < g.gl_pathc; ++i) {
          const fs::path p(g.gl_pathv[i]);
          if (is_table(p)) out.insert(p);
        }
      }
      globfree(&g);
    } else if (fs::is_directory(pat)) {
      for (const auto& entry : fs::directory_iterator(pat)) {
        if (entry.is_regular_file() && is_table(entry.path())) out.insert(entry.path());
      }
    } else if (fs::exists(pat)) {
      out.insert(pat);
    } else {
      throw Error(ErrorCode::IoError, "input not found: " + pat);
    }
  }
  return {out.begin(), out.end()};
}

namespace {

std::string report_stem(const ConfigKey& c) {
  std::string s = c.imageType + "_" + c.structure + "_" + c.normalization + "_" + c.dimensionality + "_" +
                  bin_code(c.binWidth);
  if (c.registered) s += "_registered";
  return s;
}

std::string group_stem(const ConfigKey& c) {
  std::string s = c.imageType + "_" + c.structure + "_" + c.normalization + "_" + c.dimensionality;
  if (c.registered) s += "_registered";
  return s;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  f << j.dump(2) << "\n";
}

struct LoadedTables {
  std::vector<RepeatabilityTable> tables;
  std::map<fs::path, std::vector<std::size_t>> byFile;
};

}  // namespace

json run_analyze(const std::vector<fs::path>& csvs, const AnalyzeOptions& options, const fs::path& out_dir) {
  if (csvs.empty()) throw Error(ErrorCode::IoError, "no input CSVs");
  fs::create_directories(out_dir);

  LoadedTables loaded;
  for (const auto& path : csvs) {
    const ExtractionConfig ec = parse_extraction_filename(path.filename().string());
    const auto records = read_records(path);
    std::set<std::pair<std::string, std::string>> groups;
    for (const auto& r : records) groups.emplace(r.canonicalType, r.segmentedStructure);
    if (groups.empty()) throw Error(ErrorCode::InsufficientSubjects, path.string() + " holds no rows");
    for (const auto& [type, structure] : groups) {
      ConfigKey key{type, structure, std::string(normalization_name(ec.normalization)), ec.binWidth,
                    std::string(dimensionality_name(ec.dimensionality)), ec.registered};
      loaded.byFile[fs::weakly_canonical(path)].push_back(loaded.tables.size());
      loaded.tables.push_back(build_table(records, key, options.reference));
    }
  }

  json index = {{"reference", options.reference},
                {"tables", json::array()},
                {"binWidthGroups", json::array()},
                {"topK", json::array()},
                {"filterFrequency", json::array()},
                {"deltas", json::array()},
                {"skipped", json::array()}};

  for (const auto& t : loaded.tables) {
    const std::string stem = report_stem(t.config);
    const fs::path icc_path = out_dir / ("icc_" + stem + ".csv");
    write_table_csv(icc_path, t);
    index["tables"].push_back({{"config", config_json(t.config)},
                               {"path", icc_path.filename().string()},
                               {"volumeReferenceIcc", t.volumeReference.icc}});

    try {
      const fs::path topk_path = out_dir / ("topk_" + stem + ".json");
      write_json(topk_path, to_json(top_k_per_class(t, options.topK, options.topKStatistic)));
      index["topK"].push_back({{"config", config_json(t.config)}, {"path", topk_path.filename().string()}});
    } catch (const Error& e) {
      index["skipped"].push_back({{"report", "topK"}, {"config", config_json(t.config)}, {"error", e.what()}});
    }

    const fs::path freq_path = out_dir / ("filterfreq_" + stem + ".json");
    write_json(freq_path, to_json(filter_frequency(t)));
    index["filterFrequency"].push_back({{"config", config_json(t.config)}, {"path", freq_path.filename().string()}});
  }

  // Tables that differ only in bin width.
  std::map<ConfigKey, std::vector<const RepeatabilityTable*>> groups;
  for (const auto& t : loaded.tables) {
    ConfigKey g = t.config;
    g.binWidth = 0.0;
    groups[g].push_back(&t);
  }
  for (const auto& [g, members] : groups) {
    if (members.size() < 2) continue;
    std::vector<RepeatabilityTable> tables;
    for (const auto* m : members) tables.push_back(*m);
    std::sort(tables.begin(), tables.end(), [](const auto& a, const auto& b) { return a.config.binWidth < b.config.binWidth; });
    const std::string stem = group_stem(g);
    json entry = {{"config", config_json(g)}, {"binWidths", json::array()}};
    for (const auto& t : tables) entry["binWidths"].push_back(t.config.binWidth);
    try {
      const auto spread = binwidth_spread(tables);
      const fs::path spread_path = out_dir / ("spread_" + stem + ".csv");
      write_spread_csv(spread_path, spread);
      entry["spread"] = spread_path.filename().string();

      const auto ranks = rank_distribution(tables);
      const fs::path rank_path = out_dir / ("ranks_" + stem + ".csv");
      write_rank_csv(rank_path, ranks);
      entry["ranks"] = rank_path.filename().string();

      std::vector<double> samples;
      for (const auto& [k, v] : spread) samples.push_back(v);
      try {
        const fs::path kde_path = out_dir / ("kde_" + stem + ".csv");
        write_density_csv(kde_path, kde(samples));
        entry["kde"] = kde_path.filename().string();
      } catch (const Error& e) {
        index["skipped"].push_back({{"report", "kde"}, {"config", config_json(g)}, {"error", e.what()}});
      }
    } catch (const Error& e) {
      index["skipped"].push_back({{"report", "binWidthGroup"}, {"config", config_json(g)}, {"error", e.what()}});
      continue;
    }
    index["binWidthGroups"].push_back(std::move(entry));
  }

  for (const auto& [a_path, b_path] : options.compare) {
    const auto ia = loaded.byFile.find(fs::weakly_canonical(a_path));
    const auto ib = loaded.byFile.find(fs::weakly_canonical(b_path));
    if (ia == loaded.byFile.end() || ib == loaded.byFile.end()) {
      throw Error(ErrorCode::MissingReport, "compared files must be among the inputs: " + a_path.string() + ", " +
                                                b_path.string());
    }
    for (std::size_t ta : ia->second) {
      for (std::size_t tb : ib->second) {
        const auto& a = loaded.tables[ta];
        const auto& b = loaded.tables[tb];
        if (a.config.imageType != b.config.imageType || a.config.structure != b.config.structure) continue;
        const auto delta = config_delta(a, b);
        const fs::path delta_path = out_dir / ("delta_" + report_stem(a.config) + "__vs__" + report_stem(b.config) + ".json");
        write_json(delta_path, to_json(delta));
        std::size_t improved = 0;
        for (const auto& [k, d] : delta.shared) improved += d.delta > 0.0 ? 1 : 0;
        index["deltas"].push_back({{"configA", config_json(a.config)},
                                   {"configB", config_json(b.config)},
                                   {"path", delta_path.filename().string()},
                                   {"shared", delta.shared.size()},
                                   {"improved", improved}});
      }
    }
  }

  write_json(out_dir / "reports.json", index);
  return index;
}

namespace {

json load_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingReport, "missing report " + path.string());
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MissingReport, path.string() + ": " + e.what());
  }
}

fs::path report_path(const fs::path& dir, const json& name) {
  const fs::path p = dir / name.get<std::string>();
  if (!fs::exists(p)) throw Error(ErrorCode::MissingReport, "missing report " + p.string());
  return p;
}

csv::Row config_cells(const ConfigKey& c, bool with_bin = true) {
  csv::Row row{c.imageType, c.structure, c.normalization, c.dimensionality, c.registered ? "1" : "0"};
  if (with_bin) row.push_back(csv::format_number(c.binWidth));
  return row;
}

}  // namespace

std::vector<fs::path> run_plotdata(const fs::path& report_dir, const fs::path& out_dir) {
  const json index = load_json(report_dir / "reports.json");
  fs::create_directories(out_dir);
  const std::string reference = index.value("reference", std::string(kDefaultReference));
  std::vector<fs::path> written;
  const csv::Row config_header{"imageType", "structure", "normalization", "dimensionality", "registered"};

  {
    std::vector<csv::Row> rows{config_header};
    rows.front().insert(rows.front().end(), {"binWidth", "featureClass", "featureName", "filter", "icc",
                                             "volumeReferenceIcc", "aboveVolumeReference"});
    for (const auto& t : index.at("tables")) {
      const ConfigKey cfg = config_from_json(t.at("config"));
      const auto table = read_table_csv(report_path(report_dir, t.at("path")), cfg, reference);
      for (const auto& [key, r] : table.rows) {
        auto row = config_cells(cfg);
        row.insert(row.end(), {std::string(class_name(key.cls)), key.name, key.filter, csv::format_number(r.icc),
                               csv::format_number(table.volumeReference.icc), table.above_reference(key) ? "1" : "0"});
        rows.push_back(std::move(row));
      }
    }
    written.push_back(out_dir / "icc_long.csv");
    csv::write_file(written.back(), rows);
  }

  {
    std::vector<csv::Row> ranks{config_header};
    ranks.front().insert(ranks.front().end(), {"binWidth", "rank", "count"});
    std::vector<csv::Row> spreads{config_header};
    spreads.front().insert(spreads.front().end(), {"featureClass", "featureName", "filter", "maxIccDifference"});
    for (const auto& g : index.at("binWidthGroups")) {
      const ConfigKey cfg = config_from_json(g.at("config"));
      const std::string stem = group_stem(cfg);
      if (g.contains("kde")) {
        const auto curve = csv::read_file(report_path(report_dir, g.at("kde")));
        written.push_back(out_dir / ("kde_" + stem + ".csv"));
        csv::write_file(written.back(), curve);
      }
      if (g.contains("ranks")) {
        const auto rows = csv::read_file(report_path(report_dir, g.at("ranks")));
        for (std::size_t i = 1; i < rows.size(); ++i) {
          auto row = config_cells(cfg, false);
          row.insert(row.end(), rows[i].begin(), rows[i].end());
          ranks.push_back(std::move(row));
        }
      }
      if (g.contains("spread")) {
        const auto rows = csv::read_file(report_path(report_dir, g.at("spread")));
        for (std::size_t i = 1; i < rows.size(); ++i) {
          auto row = config_cells(cfg, false);
          row.insert(row.end(), rows[i].begin(), rows[i].end());
          spreads.push_back(std::move(row));
        }
      }
    }
    written.push_back(out_dir / "ranks_long.csv");
    csv::write_file(written.back(), ranks);
    written.push_back(out_dir / "spread_long.csv");
    csv::write_file(written.back(), spreads);
  }

  {
    std::vector<csv::Row> rows{config_header};
    rows.front().insert(rows.front().end(),
                        {"binWidth", "featureClass", "featureName", "rank", "filter", "icc", "minIcc", "maxIcc"});
    for (const auto& t : index.at("topK")) {
      const ConfigKey cfg = config_from_json(t.at("config"));
      const json top = load_json(report_path(report_dir, t.at("path")));
      for (const auto& [cls, list] : top.items()) {
        std::size_t rank = 0;
        for (const auto& f : list) {
          ++rank;
          for (const auto& [filter, icc] : f.at("perFilter").items()) {
            auto row = config_cells(cfg);
            row.insert(row.end(), {cls, f.at("featureName").get<std::string>(), std::to_string(rank), filter,
                                   csv::format_number(icc.get<double>()), csv::format_number(f.at("minIcc").get<double>()),
                                   csv::format_number(f.at("maxIcc").get<double>())});
            rows.push_back(std::move(row));
          }
        }
      }
    }
    written.push_back(out_dir / "topk_long.csv");
    csv::write_file(written.back(), rows);
  }

  for (const auto& f : index.at("filterFrequency")) {
    const ConfigKey cfg = config_from_json(f.at("config"));
    const json freq = load_json(report_path(report_dir, f.at("path")));
    std::vector<csv::Row> rows{{"filterName", "count"}};
    for (const auto& [name, count] : freq.at("counts").items()) rows.push_back({name, std::to_string(count.get<std::size_t>())});
    rows.push_back({"TOTAL", std::to_string(freq.at("totalAboveReference").get<std::size_t>())});
    written.push_back(out_dir / ("filterfreq_" + report_stem(cfg) + ".csv"));
    csv::write_file(written.back(), rows);
  }

  for (const auto& d : index.at("deltas")) {
    const json delta = load_json(report_path(report_dir, d.at("path")));
    std::vector<csv::Row> rows{{"featureClass", "featureName", "filter", "iccA", "iccB", "delta"}};
    for (const auto& e : delta.at("shared")) {
      rows.push_back({e.at("featureClass").get<std::string>(), e.at("featureName").get<std::string>(),
                      e.at("filter").get<std::string>(), csv::format_number(e.at("iccA").get<double>()),
                      csv::format_number(e.at("iccB").get<double>()), csv::format_number(e.at("delta").get<double>())});
    }
    fs::path name = fs::path(d.at("path").get<std::string>()).replace_extension(".csv");
    written.push_back(out_dir / name);
    csv::write_file(written.back(), rows);
  }
  return written;
}

}  // namespace radrep
