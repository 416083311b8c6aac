#include "radrep/volume_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "radrep/error.hpp"

namespace radrep {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

struct NrrdHeader {
  std::map<std::string, std::string> fields;
  std::string payload;
};

NrrdHeader split_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  NrrdHeader header;
  std::size_t pos = 0;
  bool first_line = true;
  while (true) {
    const auto eol = content.find('\n', pos);
    if (eol == std::string::npos) {
      throw Error(ErrorCode::MissingHeaderField, "no blank line terminating the header in " + path.string());
    }
    std::string line = content.substr(pos, eol - pos);
    pos = eol + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (first_line) {
      if (line.rfind("NRRD", 0) != 0) {
        throw Error(ErrorCode::MissingHeaderField, "missing NRRD magic in " + path.string());
      }
      first_line = false;
      continue;
    }
    if (line.empty()) break;
    if (line[0] == '#') continue;
    const auto kv = line.find(":=");
    const auto colon = line.find(": ");
    if (colon == std::string::npos || (kv != std::string::npos && kv < colon)) continue;
    header.fields[lower(trim(line.substr(0, colon)))] = trim(line.substr(colon + 2));
  }
  header.payload = content.substr(pos);
  return header;
}

const std::string& require(const NrrdHeader& h, const std::string& key) {
  const auto it = h.fields.find(key);
  if (it == h.fields.end()) throw Error(ErrorCode::MissingHeaderField, "header lacks '" + key + "'");
  return it->second;
}

NrrdType parse_type(std::string t) {
  t = lower(t);
  static const std::map<std::string, NrrdType> kTypes = {
      {"short", NrrdType::Short},      {"short int", NrrdType::Short}, {"signed short", NrrdType::Short},
      {"signed short int", NrrdType::Short}, {"int16", NrrdType::Short}, {"int16_t", NrrdType::Short},
      {"int", NrrdType::Int},          {"signed int", NrrdType::Int},  {"int32", NrrdType::Int},
      {"int32_t", NrrdType::Int},      {"float", NrrdType::Float},     {"double", NrrdType::Double},
  };
  const auto it = kTypes.find(t);
  if (it == kTypes.end()) throw Error(ErrorCode::UnsupportedEncoding, "unsupported type '" + t + "'");
  return it->second;
}

std::size_t type_size(NrrdType t) {
  switch (t) {
    case NrrdType::Short: return 2;
    case NrrdType::Int: return 4;
    case NrrdType::Float: return 4;
    case NrrdType::Double: return 8;
  }
  return 0;
}

const char* type_name(NrrdType t) {
  switch (t) {
    case NrrdType::Short: return "short";
    case NrrdType::Int: return "int";
    case NrrdType::Float: return "float";
    case NrrdType::Double: return "double";
  }
  return "";
}

std::vector<double> parse_reals(const std::string& text, std::size_t expected, const char* field) {
  std::istringstream ss(text);
  std::vector<double> out;
  std::string tok;
  while (ss >> tok) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw Error(ErrorCode::MissingHeaderField, std::string("malformed '") + field + "' value: " + text);
    }
  }
  if (out.size() != expected) {
    throw Error(ErrorCode::MissingHeaderField, std::string("'") + field + "' must hold 3 values: " + text);
  }
  return out;
}

Spacing parse_space_directions(const std::string& text) {
  std::array<std::array<double, 3>, 3> dirs{};
  std::size_t pos = 0;
  for (std::size_t axis = 0; axis < 3; ++axis) {
    const auto open = text.find('(', pos);
    const auto close = text.find(')', open == std::string::npos ? pos : open);
    if (open == std::string::npos || close == std::string::npos) {
      throw Error(ErrorCode::MissingHeaderField, "malformed 'space directions': " + text);
    }
    std::string vec = text.substr(open + 1, close - open - 1);
    std::replace(vec.begin(), vec.end(), ',', ' ');
    const auto comps = parse_reals(vec, 3, "space directions");
    std::copy(comps.begin(), comps.end(), dirs[axis].begin());
    pos = close + 1;
  }
  Spacing spacing{};
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 3; ++b) {
      if (a != b && dirs[a][b] != 0.0) {
        throw Error(ErrorCode::UnsupportedEncoding, "non-diagonal 'space directions': " + text);
      }
    }
    spacing[a] = std::abs(dirs[a][a]);
  }
  return spacing;
}

template <typename T>
T load_scalar(const char* bytes, bool swap) {
  std::array<char, sizeof(T)> buf;
  std::memcpy(buf.data(), bytes, sizeof(T));
  if (swap) std::reverse(buf.begin(), buf.end());
  return std::bit_cast<T>(buf);
}

template <typename T>
void store_le(std::string& out, T value) {
  auto buf = std::bit_cast<std::array<char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf.begin(), buf.end());
  out.append(buf.data(), buf.size());
}

struct RawVolume {
  VolumeGrid grid;
  NrrdType type;
};

RawVolume read_raw(const std::filesystem::path& path) {
  const NrrdHeader h = split_header(path);

  if (require(h, "dimension") != "3") {
    throw Error(ErrorCode::UnsupportedEncoding, "only 3D volumes are supported: " + path.string());
  }
  const NrrdType type = parse_type(require(h, "type"));
  if (lower(require(h, "encoding")) != "raw") {
    throw Error(ErrorCode::UnsupportedEncoding, "encoding '" + require(h, "encoding") + "' in " + path.string());
  }
  if (h.fields.count("data file") || h.fields.count("datafile")) {
    throw Error(ErrorCode::UnsupportedEncoding, "detached payloads are not supported: " + path.string());
  }

  Dims dims{};
  {
    const auto sizes = parse_reals(require(h, "sizes"), 3, "sizes");
    for (std::size_t a = 0; a < 3; ++a) {
      if (sizes[a] < 1 || sizes[a] != std::floor(sizes[a])) {
        throw Error(ErrorCode::MissingHeaderField, "'sizes' must be positive integers");
      }
      dims[a] = static_cast<std::size_t>(sizes[a]);
    }
  }

  Spacing spacing{};
  if (const auto it = h.fields.find("spacings"); it != h.fields.end()) {
    const auto s = parse_reals(it->second, 3, "spacings");
    std::copy(s.begin(), s.end(), spacing.begin());
  } else if (const auto jt = h.fields.find("space directions"); jt != h.fields.end()) {
    spacing = parse_space_directions(jt->second);
  } else {
    throw Error(ErrorCode::MissingHeaderField, "header lacks 'spacings' or 'space directions'");
  }
  for (double s : spacing) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw Error(ErrorCode::MissingHeaderField, "spacing components must be positive and finite");
    }
  }

  std::array<double, 3> origin{0.0, 0.0, 0.0};
  if (const auto it = h.fields.find("space origin"); it != h.fields.end()) {
    std::string text = it->second;
    std::replace_if(text.begin(), text.end(), [](char c) { return c == '(' || c == ')' || c == ','; }, ' ');
    try {
      const auto o = parse_reals(text, 3, "space origin");
      std::copy(o.begin(), o.end(), origin.begin());
    } catch (const Error&) {
      // informational only
    }
  }

  bool big_endian = false;
  if (const auto it = h.fields.find("endian"); it != h.fields.end()) big_endian = lower(it->second) == "big";
  const bool swap = big_endian != (std::endian::native == std::endian::big);

  const std::size_t count = dims[0] * dims[1] * dims[2];
  const std::size_t width = type_size(type);
  if (h.payload.size() != count * width) {
    throw Error(ErrorCode::PayloadSizeMismatch,
                path.string() + ": expected " + std::to_string(count * width) + " payload bytes, found " +
                    std::to_string(h.payload.size()));
  }

  std::vector<double> values(count);
  const char* data = h.payload.data();
  for (std::size_t i = 0; i < count; ++i) {
    const char* p = data + i * width;
    switch (type) {
      case NrrdType::Short: values[i] = load_scalar<std::int16_t>(p, swap); break;
      case NrrdType::Int: values[i] = load_scalar<std::int32_t>(p, swap); break;
      case NrrdType::Float: values[i] = load_scalar<float>(p, swap); break;
      case NrrdType::Double: values[i] = load_scalar<double>(p, swap); break;
    }
    if (!std::isfinite(values[i])) {
      throw Error(ErrorCode::NonFiniteValue, path.string() + ": voxel " + std::to_string(i) + " is not finite");
    }
  }

  VolumeGrid grid(dims, spacing, std::move(values));
  grid.origin = origin;
  return {std::move(grid), type};
}

void write_raw(const std::filesystem::path& path, const Dims& dims, const Spacing& spacing,
               const std::array<double, 3>& origin, const std::vector<double>& values, NrrdType type) {
  std::ostringstream header;
  header.precision(17);
  header << "NRRD0004\n"
         << "type: " << type_name(type) << "\n"
         << "dimension: 3\n"
         << "sizes: " << dims[0] << " " << dims[1] << " " << dims[2] << "\n"
         << "spacings: " << spacing[0] << " " << spacing[1] << " " << spacing[2] << "\n"
         << "space origin: (" << origin[0] << "," << origin[1] << "," << origin[2] << ")\n"
         << "endian: little\n"
         << "encoding: raw\n\n";
  std::string out = header.str();
  out.reserve(out.size() + values.size() * type_size(type));
  for (double v : values) {
    switch (type) {
      case NrrdType::Short: store_le(out, static_cast<std::int16_t>(v)); break;
      case NrrdType::Int: store_le(out, static_cast<std::int32_t>(v)); break;
      case NrrdType::Float: store_le(out, static_cast<float>(v)); break;
      case NrrdType::Double: store_le(out, v); break;
    }
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

bool close_rel(double a, double b) { return std::abs(a - b) <= 1e-6 * std::max(std::abs(a), std::abs(b)); }

bool same_grid(const Dims& da, const Spacing& sa, const Dims& db, const Spacing& sb) {
  if (da != db) return false;
  for (std::size_t i = 0; i < 3; ++i) {
    if (!close_rel(sa[i], sb[i])) return false;
  }
  return true;
}

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t h) {
  static const char* kDigits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) s[static_cast<std::size_t>(i)] = kDigits[h & 0xF];
  return s;
}

std::uint64_t hash_dims(const Dims& dims) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto d : dims) {
    const auto v = static_cast<std::uint64_t>(d);
    h = fnv1a(&v, sizeof v, h);
  }
  return h;
}

}  // namespace

VolumeGrid::VolumeGrid(Dims d, Spacing s, std::vector<double> v) : dims(d), spacing(s), values(std::move(v)) {
  if (values.empty()) values.assign(size(), 0.0);
}

void VolumeGrid::validate() const {
  if (dims[0] == 0 || dims[1] == 0 || dims[2] == 0 || values.size() != size()) {
    throw Error(ErrorCode::PayloadSizeMismatch, "value count does not match dims");
  }
  for (double s : spacing) {
    if (!(s > 0.0)) throw Error(ErrorCode::MissingHeaderField, "spacing must be positive");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteValue, "volume holds a non-finite value");
  }
}

RoiMask::RoiMask(Dims d, Spacing s, std::vector<std::uint8_t> l, Structure st)
    : dims(d), spacing(s), labels(std::move(l)), structure(st) {
  if (labels.empty()) labels.assign(size(), 0);
}

std::size_t RoiMask::voxel_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](auto v) { return v != 0; }));
}

std::string_view structure_name(Structure s) noexcept {
  switch (s) {
    case Structure::Tumor: return "Tumor";
    case Structure::PeripheralZone: return "PeripheralZone";
    case Structure::WholeGland: return "WholeGland";
    case Structure::MuscleReference: return "MuscleReference";
  }
  return "";
}

Structure parse_structure(std::string_view name) {
  for (auto s : {Structure::Tumor, Structure::PeripheralZone, Structure::WholeGland, Structure::MuscleReference}) {
    if (structure_name(s) == name) return s;
  }
  throw Error(ErrorCode::InvalidManifest, "unknown structure '" + std::string(name) + "'");
}

VolumeGrid read_volume(const std::filesystem::path& path) { return read_raw(path).grid; }

RoiMask read_mask(const std::filesystem::path& path, Structure structure) {
  VolumeGrid raw = read_raw(path).grid;
  RoiMask mask(raw.dims, raw.spacing, std::vector<std::uint8_t>(raw.size(), 0), structure);
  mask.origin = raw.origin;
  bool any = false;
  for (std::size_t i = 0; i < raw.values.size(); ++i) {
    const double v = raw.values[i];
    if (v == 1.0) {
      mask.labels[i] = 1;
      any = true;
    } else if (v != 0.0) {
      throw Error(ErrorCode::NonBinaryLabel, path.string() + ": label value " + std::to_string(v));
    }
  }
  if (!any) throw Error(ErrorCode::EmptyMask, path.string() + " labels no voxel");
  return mask;
}

bool check_geometry(const VolumeGrid& image, const RoiMask& mask) noexcept {
  return same_grid(image.dims, image.spacing, mask.dims, mask.spacing);
}

bool check_geometry(const RoiMask& a, const RoiMask& b) noexcept {
  return same_grid(a.dims, a.spacing, b.dims, b.spacing);
}

void write_volume(const std::filesystem::path& path, const VolumeGrid& grid, NrrdType type) {
  write_raw(path, grid.dims, grid.spacing, grid.origin, grid.values, type);
}

void write_mask(const std::filesystem::path& path, const RoiMask& mask) {
  std::vector<double> values(mask.labels.begin(), mask.labels.end());
  write_raw(path, mask.dims, mask.spacing, mask.origin, values, NrrdType::Short);
}

std::string content_digest(const VolumeGrid& grid) {
  std::uint64_t h = hash_dims(grid.dims);
  for (double v : grid.values) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    h = fnv1a(&bits, sizeof bits, h);
  }
  return hex64(h);
}

std::string content_digest(const RoiMask& mask) {
  return hex64(fnv1a(mask.labels.data(), mask.labels.size(), hash_dims(mask.dims)));
}

}  // namespace radrep
