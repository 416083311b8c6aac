#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace radrep {

using Dims = std::array<std::size_t, 3>;
using Spacing = std::array<double, 3>;

/// 3D scalar field. Axis 0 varies fastest in `values` (NRRD order); axis 2 is
/// the slice axis used by every 2D (in-plane) computation.
///
/// `origin` is carried through I/O but never used by filters or features:
/// everything downstream is relative to `spacing`.
struct VolumeGrid {
  Dims dims{0, 0, 0};
  Spacing spacing{1.0, 1.0, 1.0};
  std::array<double, 3> origin{0.0, 0.0, 0.0};
  std::vector<double> values;

  VolumeGrid() = default;
  VolumeGrid(Dims d, Spacing s, std::vector<double> v = {});

  std::size_t size() const noexcept { return dims[0] * dims[1] * dims[2]; }
  std::size_t index(std::size_t x, std::size_t y, std::size_t z) const noexcept {
    return x + dims[0] * (y + dims[1] * z);
  }
  double at(std::size_t x, std::size_t y, std::size_t z) const { return values[index(x, y, z)]; }
  double& at(std::size_t x, std::size_t y, std::size_t z) { return values[index(x, y, z)]; }

  /// Throws Error on a dims/value-count mismatch, non-positive spacing or a
  /// non-finite value.
  void validate() const;

  friend bool operator==(const VolumeGrid&, const VolumeGrid&) = default;
};

enum class Structure { Tumor, PeripheralZone, WholeGland, MuscleReference };

std::string_view structure_name(Structure s) noexcept;
/// Accepts the names produced by structure_name; throws InvalidManifest otherwise.
Structure parse_structure(std::string_view name);

struct RoiMask {
  Dims dims{0, 0, 0};
  Spacing spacing{1.0, 1.0, 1.0};
  std::array<double, 3> origin{0.0, 0.0, 0.0};
  std::vector<std::uint8_t> labels;
  Structure structure = Structure::Tumor;

  RoiMask() = default;
  RoiMask(Dims d, Spacing s, std::vector<std::uint8_t> l, Structure st = Structure::Tumor);

  std::size_t size() const noexcept { return dims[0] * dims[1] * dims[2]; }
  std::size_t index(std::size_t x, std::size_t y, std::size_t z) const noexcept {
    return x + dims[0] * (y + dims[1] * z);
  }
  bool inside(std::size_t x, std::size_t y, std::size_t z) const { return labels[index(x, y, z)] != 0; }
  std::size_t voxel_count() const noexcept;

  friend bool operator==(const RoiMask&, const RoiMask&) = default;
};

/// Reads the supported NRRD subset: 3D, raw encoding, short/int/float/double
/// payload, axis-aligned `spacings` or diagonal `space directions`.
VolumeGrid read_volume(const std::filesystem::path& path);

/// Same format rules as read_volume; every payload value must be 0 or 1 and at
/// least one must be 1.
RoiMask read_mask(const std::filesystem::path& path, Structure structure);

/// Dims equal and every spacing component within 1e-6 relative.
bool check_geometry(const VolumeGrid& image, const RoiMask& mask) noexcept;
bool check_geometry(const RoiMask& a, const RoiMask& b) noexcept;

enum class NrrdType { Short, Int, Float, Double };

/// Writes a raw little-endian NRRD. Values are cast to `type`.
void write_volume(const std::filesystem::path& path, const VolumeGrid& grid,
                  NrrdType type = NrrdType::Float);
void write_mask(const std::filesystem::path& path, const RoiMask& mask);

/// 64-bit FNV-1a over the IEEE-754 bytes of the values, hex encoded.
std::string content_digest(const VolumeGrid& grid);
std::string content_digest(const RoiMask& mask);

}  // namespace radrep
