#include "radrep/texture_matrices.hpp"

#include <algorithm>

#include "radrep/error.hpp"

namespace radrep {

namespace {

// The first four entries are the in-plane directions, so the 2D set is a prefix.
constexpr std::array<Offset, 13> kDirections{{
    {1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {-1, 1, 0},
    {-1, -1, 1}, {0, -1, 1}, {1, -1, 1},
    {-1, 0, 1}, {0, 0, 1}, {1, 0, 1},
    {-1, 1, 1}, {0, 1, 1}, {1, 1, 1},
}};

constexpr std::array<Offset, 26> make_neighbourhood() {
  std::array<Offset, 26> out{};
  std::size_t n = 0;
  // in-plane neighbours first so the 2D set is a prefix
  for (int dz : {0, -1, 1}) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0 && dz == 0) continue;
        out[n++] = {dx, dy, dz};
      }
    }
  }
  return out;
}

constexpr std::array<Offset, 26> kNeighbours = make_neighbourhood();

struct Cursor {
  const Dims& dims;

  bool step(std::size_t x, std::size_t y, std::size_t z, const Offset& d, std::size_t& out) const {
    const auto nx = static_cast<std::ptrdiff_t>(x) + d[0];
    const auto ny = static_cast<std::ptrdiff_t>(y) + d[1];
    const auto nz = static_cast<std::ptrdiff_t>(z) + d[2];
    if (nx < 0 || ny < 0 || nz < 0 || nx >= static_cast<std::ptrdiff_t>(dims[0]) ||
        ny >= static_cast<std::ptrdiff_t>(dims[1]) || nz >= static_cast<std::ptrdiff_t>(dims[2])) {
      return false;
    }
    out = static_cast<std::size_t>(nx) + dims[0] * (static_cast<std::size_t>(ny) + dims[1] * static_cast<std::size_t>(nz));
    return true;
  }
};

}  // namespace

std::span<const Offset> texture_directions(Dimensionality dim) {
  return dim == Dimensionality::ThreeD ? std::span<const Offset>(kDirections)
                                       : std::span<const Offset>(kDirections).first(4);
}

std::span<const Offset> neighbourhood(Dimensionality dim) {
  return dim == Dimensionality::ThreeD ? std::span<const Offset>(kNeighbours)
                                       : std::span<const Offset>(kNeighbours).first(8);
}

GlcMatrix build_glcm(const DiscretizedRoi& disc, Dimensionality dim) {
  return build_glcm(disc, texture_directions(dim));
}

GlcMatrix build_glcm(const DiscretizedRoi& disc, std::span<const Offset> offsets) {
  const int ng = disc.numGrayLevels;
  GlcMatrix m;
  m.numGrayLevels = ng;
  m.counts.assign(static_cast<std::size_t>(ng * ng), 0);
  const Cursor cur{disc.dims};
  for (std::size_t z = 0; z < disc.dims[2]; ++z) {
    for (std::size_t y = 0; y < disc.dims[1]; ++y) {
      for (std::size_t x = 0; x < disc.dims[0]; ++x) {
        const int a = disc.levels[disc.index(x, y, z)];
        if (a == 0) continue;
        for (const Offset& d : offsets) {
          std::size_t n;
          if (!cur.step(x, y, z, d, n)) continue;
          const int b = disc.levels[n];
          if (b == 0) continue;
          ++m.counts[static_cast<std::size_t>((a - 1) * ng + (b - 1))];
          ++m.counts[static_cast<std::size_t>((b - 1) * ng + (a - 1))];
          m.total += 2;
        }
      }
    }
  }
  if (m.total == 0) throw Error(ErrorCode::NoValidPairs, "ROI has no neighbouring voxel pair");
  m.probs.resize(m.counts.size());
  const double inv = 1.0 / static_cast<double>(m.total);
  for (std::size_t i = 0; i < m.counts.size(); ++i) m.probs[i] = static_cast<double>(m.counts[i]) * inv;
  return m;
}

GlrlMatrix build_glrlm(const DiscretizedRoi& disc, Dimensionality dim) {
  return build_glrlm(disc, texture_directions(dim));
}

GlrlMatrix build_glrlm(const DiscretizedRoi& disc, std::span<const Offset> directions) {
  const Cursor cur{disc.dims};
  std::vector<std::pair<int, int>> runs;  // (level, length)
  for (const Offset& d : directions) {
    const Offset back{-d[0], -d[1], -d[2]};
    for (std::size_t z = 0; z < disc.dims[2]; ++z) {
      for (std::size_t y = 0; y < disc.dims[1]; ++y) {
        for (std::size_t x = 0; x < disc.dims[0]; ++x) {
          const int level = disc.levels[disc.index(x, y, z)];
          if (level == 0) continue;
          std::size_t prev;
          if (cur.step(x, y, z, back, prev) && disc.levels[prev] == level) continue;
          int length = 1;
          std::array<std::size_t, 3> p{x, y, z};
          std::size_t next;
          while (cur.step(p[0], p[1], p[2], d, next) && disc.levels[next] == level) {
            ++length;
            for (std::size_t a = 0; a < 3; ++a) p[a] = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(p[a]) + d[a]);
          }
          runs.emplace_back(level, length);
        }
      }
    }
  }

  GlrlMatrix m;
  m.numGrayLevels = disc.numGrayLevels;
  m.numDirections = directions.size();
  m.roiVoxels = disc.roi_voxels();
  for (const auto& r : runs) m.maxRunLength = std::max(m.maxRunLength, r.second);
  m.counts.assign(static_cast<std::size_t>(m.numGrayLevels * m.maxRunLength), 0);
  for (const auto& [level, length] : runs) {
    ++m.counts[static_cast<std::size_t>((level - 1) * m.maxRunLength + (length - 1))];
  }
  m.totalRuns = runs.size();
  if (m.totalRuns == 0) throw Error(ErrorCode::EmptyMask, "ROI holds no voxel");
  return m;
}

std::vector<int> label_components(const Dims& dims, std::span<const int> labels, std::span<const Offset> neighbours,
                                  int& count) {
  std::vector<int> component(labels.size(), -1);
  std::vector<std::size_t> stack;
  const Cursor cur{dims};
  count = 0;
  for (std::size_t seed = 0; seed < labels.size(); ++seed) {
    if (labels[seed] == 0 || component[seed] >= 0) continue;
    const int id = count++;
    component[seed] = id;
    stack.assign(1, seed);
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      const std::size_t x = v % dims[0];
      const std::size_t y = (v / dims[0]) % dims[1];
      const std::size_t z = v / (dims[0] * dims[1]);
      for (const Offset& d : neighbours) {
        std::size_t n;
        if (!cur.step(x, y, z, d, n)) continue;
        if (component[n] >= 0 || labels[n] != labels[seed]) continue;
        component[n] = id;
        stack.push_back(n);
      }
    }
  }
  return component;
}

GlszMatrix build_glszm(const DiscretizedRoi& disc, Dimensionality dim) {
  int zones = 0;
  const auto component = label_components(disc.dims, disc.levels, neighbourhood(dim), zones);
  std::vector<int> zone_size(static_cast<std::size_t>(zones), 0);
  std::vector<int> zone_level(static_cast<std::size_t>(zones), 0);
  for (std::size_t i = 0; i < component.size(); ++i) {
    if (component[i] < 0) continue;
    const auto c = static_cast<std::size_t>(component[i]);
    ++zone_size[c];
    zone_level[c] = disc.levels[i];
  }

  GlszMatrix m;
  m.numGrayLevels = disc.numGrayLevels;
  m.roiVoxels = disc.roi_voxels();
  m.maxZoneSize = zone_size.empty() ? 0 : *std::max_element(zone_size.begin(), zone_size.end());
  m.counts.assign(static_cast<std::size_t>(m.numGrayLevels * m.maxZoneSize), 0);
  for (std::size_t c = 0; c < zone_size.size(); ++c) {
    ++m.counts[static_cast<std::size_t>((zone_level[c] - 1) * m.maxZoneSize + (zone_size[c] - 1))];
  }
  m.totalZones = static_cast<std::uint64_t>(zones);
  if (m.totalZones == 0) throw Error(ErrorCode::EmptyMask, "ROI holds no voxel");
  return m;
}

}  // namespace radrep
