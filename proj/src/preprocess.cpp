#include "radrep/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "radrep/error.hpp"

namespace radrep {

namespace {

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;
};

template <typename Pred>
Moments population_moments(const std::vector<double>& values, Pred include) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (include(i)) {
      sum += values[i];
      ++n;
    }
  }
  if (n == 0) return {};
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (include(i)) ss += (values[i] - mean) * (values[i] - mean);
  }
  return {mean, std::sqrt(ss / static_cast<double>(n))};
}

/// 1D convolution along `axis` with a symmetric odd-length kernel and
/// nearest-neighbour replication at the borders.
std::vector<double> convolve_axis(const std::vector<double>& in, const Dims& dims, std::size_t axis,
                                  const std::vector<double>& kernel) {
  std::vector<double> out(in.size());
  const auto radius = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  const auto len = static_cast<std::ptrdiff_t>(dims[axis]);
  const std::size_t stride = axis == 0 ? 1 : (axis == 1 ? dims[0] : dims[0] * dims[1]);
  const std::size_t lines = in.size() / dims[axis];

  std::vector<double> line(static_cast<std::size_t>(len));
  for (std::size_t l = 0; l < lines; ++l) {
    // Base offset of line l: decompose l over the two other axes.
    std::size_t base;
    if (axis == 0) {
      base = l * dims[0];
    } else if (axis == 1) {
      base = (l % dims[0]) + (l / dims[0]) * dims[0] * dims[1];
    } else {
      base = l;
    }
    for (std::ptrdiff_t i = 0; i < len; ++i) line[static_cast<std::size_t>(i)] = in[base + static_cast<std::size_t>(i) * stride];
    for (std::ptrdiff_t i = 0; i < len; ++i) {
      double acc = 0.0;
      for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
        const std::ptrdiff_t j = std::clamp<std::ptrdiff_t>(i - k, 0, len - 1);
        acc += kernel[static_cast<std::size_t>(k + radius)] * line[static_cast<std::size_t>(j)];
      }
      out[base + static_cast<std::size_t>(i) * stride] = acc;
    }
  }
  return out;
}

std::string sigma_text(double sigma) {
  char buf[64];
  if (std::abs(sigma * 10.0 - std::round(sigma * 10.0)) < 1e-9) {
    std::snprintf(buf, sizeof buf, "%.1f", sigma);
  } else {
    std::snprintf(buf, sizeof buf, "%g", sigma);
  }
  std::string s(buf);
  std::replace(s.begin(), s.end(), '.', '-');
  return s;
}

bool valid_subband(const std::string& band) {
  if (band.size() != 2 && band.size() != 3) return false;
  return std::all_of(band.begin(), band.end(), [](char c) { return c == 'L' || c == 'H'; });
}

}  // namespace

VolumeGrid normalize(const VolumeGrid& volume, const NormalizationSpec& spec) {
  if (spec.mode == NormalizationMode::None) return volume;
  if (!(spec.targetStd > 0.0)) throw Error(ErrorCode::ZeroVariance, "target standard deviation must be positive");

  Moments m;
  if (spec.mode == NormalizationMode::WholeImage) {
    m = population_moments(volume.values, [](std::size_t) { return true; });
  } else {
    if (!spec.referenceMask || spec.referenceMask->voxel_count() == 0) {
      throw Error(ErrorCode::MissingReferenceMask, "reference-region normalization needs a nonempty reference mask");
    }
    const RoiMask& ref = *spec.referenceMask;
    if (!check_geometry(volume, ref)) throw Error(ErrorCode::GeometryMismatch, "reference mask grid differs from image");
    m = population_moments(volume.values, [&](std::size_t i) { return ref.labels[i] != 0; });
  }
  if (!(m.stddev > 0.0)) throw Error(ErrorCode::ZeroVariance, "normalization region has zero variance");

  VolumeGrid out = volume;
  const double scale = spec.targetStd / m.stddev;
  for (double& v : out.values) v = spec.targetMean + (v - m.mean) * scale;
  return out;
}

FilterSpec FilterSpec::wavelet(std::string band) {
  const FilterKind kind = band.size() == 3 ? FilterKind::Wavelet3D : FilterKind::Wavelet2D;
  return {kind, std::nullopt, std::move(band)};
}

void FilterSpec::validate() const {
  const bool is_log = kind == FilterKind::LoG;
  const bool is_wavelet = kind == FilterKind::Wavelet2D || kind == FilterKind::Wavelet3D;
  if (is_log != sigmaMm.has_value()) throw Error(ErrorCode::InvalidFilterSpec, "sigma is required for LoG only");
  if (is_log && !(*sigmaMm > 0.0)) throw Error(ErrorCode::InvalidFilterSpec, "LoG sigma must be positive");
  if (is_wavelet != subband.has_value()) throw Error(ErrorCode::InvalidFilterSpec, "subband is required for wavelets only");
  if (is_wavelet) {
    const std::size_t expected = kind == FilterKind::Wavelet3D ? 3 : 2;
    if (!valid_subband(*subband) || subband->size() != expected) {
      throw Error(ErrorCode::InvalidFilterSpec, "bad wavelet subband '" + *subband + "'");
    }
  }
}

std::string filter_name(const FilterSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case FilterKind::Original: return "original";
    case FilterKind::LoG: return "log-sigma-" + sigma_text(*spec.sigmaMm) + "-mm-3D";
    case FilterKind::Wavelet2D:
    case FilterKind::Wavelet3D: return "wavelet-" + *spec.subband;
    case FilterKind::Square: return "square";
    case FilterKind::SquareRoot: return "squareroot";
    case FilterKind::Logarithm: return "logarithm";
    case FilterKind::Exponential: return "exponential";
  }
  return {};
}

FilterSpec parse_filter_name(std::string_view name) {
  if (name == "original") return FilterSpec::original();
  if (name == "square") return FilterSpec::pointwise(FilterKind::Square);
  if (name == "squareroot") return FilterSpec::pointwise(FilterKind::SquareRoot);
  if (name == "logarithm") return FilterSpec::pointwise(FilterKind::Logarithm);
  if (name == "exponential") return FilterSpec::pointwise(FilterKind::Exponential);
  if (name.rfind("wavelet-", 0) == 0) {
    std::string band(name.substr(8));
    if (!valid_subband(band)) throw Error(ErrorCode::InvalidFilterSpec, "bad wavelet filter '" + std::string(name) + "'");
    return FilterSpec::wavelet(band);
  }
  constexpr std::string_view prefix = "log-sigma-";
  if (name.rfind(prefix, 0) == 0) {
    const auto mm = name.find("-mm");
    if (mm != std::string_view::npos && mm > prefix.size()) {
      std::string num(name.substr(prefix.size(), mm - prefix.size()));
      std::replace(num.begin(), num.end(), '-', '.');
      try {
        std::size_t used = 0;
        const double sigma = std::stod(num, &used);
        if (used == num.size() && sigma > 0.0) return FilterSpec::log(sigma);
      } catch (const std::exception&) {
      }
    }
  }
  throw Error(ErrorCode::InvalidFilterSpec, "unknown filter '" + std::string(name) + "'");
}

const std::vector<std::string>& wavelet_subbands(bool three_d) {
  static const std::vector<std::string> k2{"LL", "LH", "HL", "HH"};
  static const std::vector<std::string> k3{"LLL", "LLH", "LHL", "LHH", "HLL", "HLH", "HHL", "HHH"};
  return three_d ? k3 : k2;
}

VolumeGrid filter_log(const VolumeGrid& volume, double sigmaMm) {
  if (!(sigmaMm > 0.0)) throw Error(ErrorCode::SigmaTooSmallForGrid, "sigma must be positive");

  std::array<std::vector<double>, 3> smooth;
  std::array<std::vector<double>, 3> second;
  for (std::size_t a = 0; a < 3; ++a) {
    const double h = volume.spacing[a];
    const double s = sigmaMm / h;
    if (s < 0.25) {
      throw Error(ErrorCode::SigmaTooSmallForGrid,
                  "sigma " + std::to_string(sigmaMm) + " mm is below a quarter voxel on axis " + std::to_string(a));
    }
    const auto radius = static_cast<std::ptrdiff_t>(std::ceil(4.0 * s));
    const std::size_t width = static_cast<std::size_t>(2 * radius + 1);
    smooth[a].resize(width);
    second[a].resize(width);
    double z = 0.0;
    for (std::ptrdiff_t n = -radius; n <= radius; ++n) {
      const double w = std::exp(-0.5 * static_cast<double>(n * n) / (s * s));
      smooth[a][static_cast<std::size_t>(n + radius)] = w;
      z += w;
    }
    const double inv_s2 = 1.0 / (sigmaMm * sigmaMm);
    double dsum = 0.0;
    for (std::ptrdiff_t n = -radius; n <= radius; ++n) {
      auto& w = smooth[a][static_cast<std::size_t>(n + radius)];
      w /= z;
      const double x = static_cast<double>(n) * h;
      const double d = (x * x * inv_s2 - 1.0) * inv_s2 * w;
      second[a][static_cast<std::size_t>(n + radius)] = d;
      dsum += d;
    }
    // zero-sum keeps the response to constant and affine fields exactly zero
    const double shift = dsum / static_cast<double>(width);
    for (double& d : second[a]) d -= shift;
  }

  VolumeGrid out(volume.dims, volume.spacing, std::vector<double>(volume.size(), 0.0));
  out.origin = volume.origin;
  for (std::size_t a = 0; a < 3; ++a) {
    std::vector<double> term = volume.values;
    for (std::size_t b = 0; b < 3; ++b) {
      term = convolve_axis(term, volume.dims, b, b == a ? second[b] : smooth[b]);
    }
    for (std::size_t i = 0; i < term.size(); ++i) out.values[i] += term[i];
  }
  const double norm = sigmaMm * sigmaMm;
  for (double& v : out.values) v *= norm;
  return out;
}

std::map<std::string, VolumeGrid> filter_wavelet(const VolumeGrid& volume, bool three_d) {
  const std::size_t axes = three_d ? 3 : 2;
  for (std::size_t a = 0; a < axes; ++a) {
    if (volume.dims[a] < 2) {
      throw Error(ErrorCode::AxisTooShort, "wavelet needs at least 2 voxels along axis " + std::to_string(a));
    }
  }

  const double r = 1.0 / std::numbers::sqrt2;
  auto haar_axis = [&](const std::vector<double>& in, std::size_t axis, bool high) {
    std::vector<double> out(in.size());
    const Dims& d = volume.dims;
    for (std::size_t z = 0; z < d[2]; ++z) {
      for (std::size_t y = 0; y < d[1]; ++y) {
        for (std::size_t x = 0; x < d[0]; ++x) {
          std::array<std::size_t, 3> nb{x, y, z};
          nb[axis] = (nb[axis] + 1) % d[axis];
          const double a = in[volume.index(x, y, z)];
          const double b = in[volume.index(nb[0], nb[1], nb[2])];
          out[volume.index(x, y, z)] = high ? (a - b) * r : (a + b) * r;
        }
      }
    }
    return out;
  };

  std::map<std::string, std::vector<double>> level{{"", volume.values}};
  for (std::size_t a = 0; a < axes; ++a) {
    std::map<std::string, std::vector<double>> next;
    for (const auto& [label, data] : level) {
      next.emplace(label + "L", haar_axis(data, a, false));
      next.emplace(label + "H", haar_axis(data, a, true));
    }
    level = std::move(next);
  }

  std::map<std::string, VolumeGrid> out;
  for (auto& [label, data] : level) {
    VolumeGrid g(volume.dims, volume.spacing, std::move(data));
    g.origin = volume.origin;
    out.emplace(label, std::move(g));
  }
  return out;
}

VolumeGrid filter_pointwise(const VolumeGrid& volume, FilterKind kind) {
  if (kind != FilterKind::Square && kind != FilterKind::SquareRoot && kind != FilterKind::Logarithm &&
      kind != FilterKind::Exponential) {
    throw Error(ErrorCode::InvalidFilterSpec, "not a pointwise filter");
  }
  double max_abs = 0.0;
  for (double v : volume.values) max_abs = std::max(max_abs, std::abs(v));
  if (max_abs == 0.0) return volume;

  VolumeGrid out = volume;
  const double log_max = std::log1p(max_abs);
  for (double& v : out.values) {
    const double sign = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
    const double t = std::abs(v);
    double mag = 0.0;
    switch (kind) {
      case FilterKind::Square: {
        const double ratio = t / max_abs;
        mag = ratio * ratio * max_abs;
        break;
      }
      case FilterKind::SquareRoot: mag = std::sqrt(t / max_abs) * max_abs; break;
      case FilterKind::Logarithm: mag = std::log1p(t) / log_max * max_abs; break;
      case FilterKind::Exponential: mag = max_abs * std::exp(t - max_abs); break;
      default: break;
    }
    v = sign * mag;
  }
  return out;
}

VolumeGrid apply_filter(const VolumeGrid& volume, const FilterSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case FilterKind::Original: return volume;
    case FilterKind::LoG: return filter_log(volume, *spec.sigmaMm);
    case FilterKind::Wavelet2D:
    case FilterKind::Wavelet3D: {
      auto bands = filter_wavelet(volume, spec.kind == FilterKind::Wavelet3D);
      return std::move(bands.at(*spec.subband));
    }
    default: return filter_pointwise(volume, spec.kind);
  }
}

}  // namespace radrep
