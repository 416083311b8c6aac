// Synthetic test-retest cohorts written as NRRD files plus a run manifest.
#pragma once

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "json.hpp"
#include "radrep/volume_io.hpp"

namespace fixture {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("radrep_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

struct CohortOptions {
  int subjects = 4;
  radrep::Dims dims{14, 14, 3};
  radrep::Spacing spacing{0.8, 0.8, 3.0};
  std::vector<std::string> imageTypes{"T2AX"};
  bool registered = false;
  std::uint64_t seed = 7;
};

inline radrep::RoiMask ellipsoid(radrep::Dims d, radrep::Spacing s, double cx, double cy, double rx, double ry,
                                 std::size_t z0, std::size_t z1) {
  radrep::RoiMask m(d, s, std::vector<std::uint8_t>(d[0] * d[1] * d[2], 0));
  for (std::size_t z = z0; z < z1 && z < d[2]; ++z) {
    for (std::size_t y = 0; y < d[1]; ++y) {
      for (std::size_t x = 0; x < d[0]; ++x) {
        const double u = (static_cast<double>(x) - cx) / rx;
        const double v = (static_cast<double>(y) - cy) / ry;
        if (u * u + v * v <= 1.0) m.labels[m.index(x, y, z)] = 1;
      }
    }
  }
  return m;
}

/// Writes images and masks for every subject / timepoint and returns the
/// manifest document (paths relative to `dir`).
inline nlohmann::json write_cohort(const fs::path& dir, const CohortOptions& opt, const nlohmann::json& settings) {
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(-1, 1);
  nlohmann::json cohort = nlohmann::json::array();
  const auto d = opt.dims;
  for (int s = 0; s < opt.subjects; ++s) {
    const std::string id = "P" + std::string(s < 9 ? "0" : "") + std::to_string(s + 1);
    const double size = 2.5 + 0.6 * s + 0.3 * u(rng);
    const double contrast = 80 + 15 * s;
    for (const auto& type : opt.imageTypes) {
      for (int tp : {1, 2}) {
        const double jitter = 0.25 * u(rng);
        radrep::VolumeGrid img(d, opt.spacing, std::vector<double>(d[0] * d[1] * d[2]));
        const double cx = d[0] / 2.0 + jitter, cy = d[1] / 2.0 - jitter;
        for (std::size_t z = 0; z < d[2]; ++z) {
          for (std::size_t y = 0; y < d[1]; ++y) {
            for (std::size_t x = 0; x < d[0]; ++x) {
              const double r2 = std::pow((x - cx) / (size + 2), 2) + std::pow((y - cy) / (size + 2), 2);
              img.at(x, y, z) = 200 + contrast * std::exp(-r2) + 12 * g(rng) + 3.0 * x;
            }
          }
        }
        const auto stem = id + "_" + type + "_TP" + std::to_string(tp);
        radrep::write_volume(dir / (stem + ".nrrd"), img, radrep::NrrdType::Float);
        const auto tumor = ellipsoid(d, opt.spacing, cx, cy, size, size * 0.8, 0, d[2]);
        const auto gland = ellipsoid(d, opt.spacing, cx, cy, size + 3, size + 2, 0, d[2]);
        const auto muscle = ellipsoid(d, opt.spacing, 2, 2, 2, 2, 0, d[2]);
        radrep::write_mask(dir / (stem + "_tumor.nrrd"), tumor);
        radrep::write_mask(dir / (stem + "_gland.nrrd"), gland);
        radrep::write_mask(dir / (stem + "_muscle.nrrd"), muscle);
        nlohmann::json tumor_entry = {{"structure", "Tumor"}, {"path", stem + "_tumor.nrrd"}};
        if (opt.registered && tp == 2) {
          const auto reg = ellipsoid(d, opt.spacing, cx + 0.5, cy, size, size * 0.8, 0, d[2]);
          radrep::write_mask(dir / (stem + "_tumor_reg.nrrd"), reg);
          tumor_entry["registeredPath"] = stem + "_tumor_reg.nrrd";
        }
        cohort.push_back({{"subjectId", id},
                          {"timepoint", tp},
                          {"imageType", type},
                          {"imagePath", stem + ".nrrd"},
                          {"masks", {tumor_entry, {{"structure", "WholeGland"}, {"path", stem + "_gland.nrrd"}}}},
                          {"referenceMaskPath", stem + "_muscle.nrrd"}});
      }
    }
  }
  return {{"cohort", cohort}, {"settings", settings}};
}

inline fs::path write_manifest(const fs::path& dir, const nlohmann::json& doc, const std::string& name = "run.json") {
  std::ofstream f(dir / name);
  f << doc.dump(2);
  return dir / name;
}

inline std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace fixture
