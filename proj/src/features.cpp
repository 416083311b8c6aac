#include "radrep/features.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "radrep/error.hpp"

namespace radrep {

namespace {

double xlog2x(double p) { return p > 0.0 ? p * std::log2(p) : 0.0; }

void put(FeatureMap& out, FeatureClass cls, const char* name, FeatureValue v) {
  out[FeatureId{cls, name}] = v;
}

struct SizeMatrixNames {
  const char* shortEmphasis;
  const char* longEmphasis;
  const char* sizeNonUniformity;
  const char* percentage;
  const char* sizeVariance;
  const char* entropy;
  const char* lowGray;
  const char* highGray;
  const char* shortLow;
  const char* shortHigh;
  const char* longLow;
  const char* longHigh;
};

constexpr SizeMatrixNames kRunNames{
    "ShortRunEmphasis",          "LongRunEmphasis",
    "RunLengthNonUniformity",    "RunPercentage",
    "RunVariance",               "RunEntropy",
    "LowGrayLevelRunEmphasis",   "HighGrayLevelRunEmphasis",
    "ShortRunLowGrayLevelEmphasis", "ShortRunHighGrayLevelEmphasis",
    "LongRunLowGrayLevelEmphasis",  "LongRunHighGrayLevelEmphasis",
};

constexpr SizeMatrixNames kZoneNames{
    "SmallAreaEmphasis",          "LargeAreaEmphasis",
    "SizeZoneNonUniformity",      "ZonePercentage",
    "ZoneVariance",               "ZoneEntropy",
    "LowGrayLevelZoneEmphasis",   "HighGrayLevelZoneEmphasis",
    "SmallAreaLowGrayLevelEmphasis", "SmallAreaHighGrayLevelEmphasis",
    "LargeAreaLowGrayLevelEmphasis", "LargeAreaHighGrayLevelEmphasis",
};

// GLRLM and GLSZM share one family of statistics over a (gray level x size)
// count matrix; only the names and the percentage denominator differ.
FeatureMap size_matrix_features(FeatureClass cls, const SizeMatrixNames& names, const std::vector<std::uint64_t>& counts,
                                int ng, int ns, std::uint64_t total, double percentage_denominator) {
  if (total == 0) throw Error(ErrorCode::EmptyMask, "matrix holds no entries");
  const double inv_total = 1.0 / static_cast<double>(total);

  double se = 0, le = 0, lg = 0, hg = 0, sl = 0, sh = 0, ll = 0, lh = 0, entropy = 0;
  double mean_i = 0, mean_j = 0;
  std::vector<double> row_sum(static_cast<std::size_t>(ng), 0.0);
  std::vector<double> col_sum(static_cast<std::size_t>(ns), 0.0);
  for (int i = 1; i <= ng; ++i) {
    for (int j = 1; j <= ns; ++j) {
      const auto c = counts[static_cast<std::size_t>((i - 1) * ns + (j - 1))];
      if (c == 0) continue;
      const double r = static_cast<double>(c) * inv_total;
      const double i2 = static_cast<double>(i) * i;
      const double j2 = static_cast<double>(j) * j;
      se += r / j2;
      le += r * j2;
      lg += r / i2;
      hg += r * i2;
      sl += r / (i2 * j2);
      sh += r * i2 / j2;
      ll += r * j2 / i2;
      lh += r * i2 * j2;
      entropy -= xlog2x(r);
      mean_i += r * i;
      mean_j += r * j;
      row_sum[static_cast<std::size_t>(i - 1)] += static_cast<double>(c);
      col_sum[static_cast<std::size_t>(j - 1)] += static_cast<double>(c);
    }
  }
  double var_i = 0, var_j = 0;
  for (int i = 1; i <= ng; ++i) {
    for (int j = 1; j <= ns; ++j) {
      const auto c = counts[static_cast<std::size_t>((i - 1) * ns + (j - 1))];
      if (c == 0) continue;
      const double r = static_cast<double>(c) * inv_total;
      var_i += r * (i - mean_i) * (i - mean_i);
      var_j += r * (j - mean_j) * (j - mean_j);
    }
  }
  double gln = 0, snu = 0;
  for (double s : row_sum) gln += s * s;
  for (double s : col_sum) snu += s * s;

  FeatureMap out;
  put(out, cls, names.shortEmphasis, se);
  put(out, cls, names.longEmphasis, le);
  put(out, cls, "GrayLevelNonUniformity", gln * inv_total);
  put(out, cls, names.sizeNonUniformity, snu * inv_total);
  put(out, cls, names.percentage, static_cast<double>(total) / percentage_denominator);
  put(out, cls, "GrayLevelVariance", var_i);
  put(out, cls, names.sizeVariance, var_j);
  put(out, cls, names.entropy, entropy);
  put(out, cls, names.lowGray, lg);
  put(out, cls, names.highGray, hg);
  put(out, cls, names.shortLow, sl);
  put(out, cls, names.shortHigh, sh);
  put(out, cls, names.longLow, ll);
  put(out, cls, names.longHigh, lh);
  return out;
}

}  // namespace

std::string_view class_name(FeatureClass c) noexcept {
  switch (c) {
    case FeatureClass::FirstOrder: return "firstorder";
    case FeatureClass::Shape: return "shape";
    case FeatureClass::Glcm: return "glcm";
    case FeatureClass::Glrlm: return "glrlm";
    case FeatureClass::Glszm: return "glszm";
  }
  return "";
}

std::optional<FeatureClass> parse_class(std::string_view name) noexcept {
  for (auto c : all_classes()) {
    if (class_name(c) == name) return c;
  }
  return std::nullopt;
}

const std::vector<FeatureClass>& all_classes() {
  static const std::vector<FeatureClass> k{FeatureClass::Shape, FeatureClass::FirstOrder, FeatureClass::Glcm,
                                           FeatureClass::Glrlm, FeatureClass::Glszm};
  return k;
}

const std::vector<std::string>& feature_catalog(FeatureClass c) {
  static const std::vector<std::string> kFirstOrder{
      "10Percentile", "90Percentile", "Energy",          "Entropy",  "Kurtosis",   "Maximum",
      "Mean",         "MeanAbsoluteDeviation", "Median", "Minimum",  "Range",      "RootMeanSquared",
      "Skewness",     "StandardDeviation",     "Uniformity", "Variance"};
  static const std::vector<std::string> kShape{
      "Elongation",         "MajorAxisLength",   "Maximum2DDiameterColumn", "Maximum2DDiameterRow",
      "Maximum2DDiameterSlice", "Maximum3DDiameter", "MinorAxisLength",     "Sphericity",
      "SurfaceArea",        "SurfaceVolumeRatio", "Volume"};
  static const std::vector<std::string> kGlcm{
      "Autocorrelation", "ClusterProminence", "ClusterShade", "ClusterTendency",  "Contrast",     "Correlation",
      "DifferenceAverage", "DifferenceEntropy", "Id",        "Idm",              "InverseVariance", "JointAverage",
      "JointEnergy",     "JointEntropy",      "MaximumProbability", "SumEntropy"};
  static const std::vector<std::string> kGlrlm{
      "GrayLevelNonUniformity", "GrayLevelVariance",  "HighGrayLevelRunEmphasis",    "LongRunEmphasis",
      "LongRunHighGrayLevelEmphasis", "LongRunLowGrayLevelEmphasis", "LowGrayLevelRunEmphasis", "RunEntropy",
      "RunLengthNonUniformity", "RunPercentage",      "RunVariance",                 "ShortRunEmphasis",
      "ShortRunHighGrayLevelEmphasis", "ShortRunLowGrayLevelEmphasis"};
  static const std::vector<std::string> kGlszm{
      "GrayLevelNonUniformity", "GrayLevelVariance", "HighGrayLevelZoneEmphasis", "LargeAreaEmphasis",
      "LargeAreaHighGrayLevelEmphasis", "LargeAreaLowGrayLevelEmphasis", "LowGrayLevelZoneEmphasis",
      "SizeZoneNonUniformity", "SmallAreaEmphasis", "SmallAreaHighGrayLevelEmphasis",
      "SmallAreaLowGrayLevelEmphasis", "ZoneEntropy", "ZonePercentage", "ZoneVariance"};
  switch (c) {
    case FeatureClass::FirstOrder: return kFirstOrder;
    case FeatureClass::Shape: return kShape;
    case FeatureClass::Glcm: return kGlcm;
    case FeatureClass::Glrlm: return kGlrlm;
    case FeatureClass::Glszm: return kGlszm;
  }
  return kFirstOrder;
}

const std::set<FeatureId>& excluded_features() {
  static const std::set<FeatureId> k{
      {FeatureClass::Shape, "Compactness1"},  {FeatureClass::Shape, "Compactness2"},
      {FeatureClass::Shape, "SphericalDisproportion"}, {FeatureClass::Shape, "Flatness"},
      {FeatureClass::Shape, "LeastAxisLength"}, {FeatureClass::Glcm, "SumAverage"},
      {FeatureClass::Glcm, "Homogeneity1"},   {FeatureClass::Glcm, "Homogeneity2"},
  };
  return k;
}

FeatureMap firstorder_features(const VolumeGrid& volume, const RoiMask& mask, const DiscretizationSpec& spec) {
  if (!check_geometry(volume, mask)) throw Error(ErrorCode::GeometryMismatch, "mask grid differs from image grid");
  std::vector<double> x;
  for (std::size_t i = 0; i < volume.values.size(); ++i) {
    if (mask.labels[i] != 0) x.push_back(volume.values[i]);
  }
  if (x.empty()) throw Error(ErrorCode::EmptyMask, "ROI holds no voxel");
  const std::size_t n = x.size();
  const double nd = static_cast<double>(n);
  std::sort(x.begin(), x.end());

  double sum = 0, energy = 0;
  for (double v : x) {
    sum += v;
    energy += v * v;
  }
  const double mean = sum / nd;
  double m2 = 0, m3 = 0, m4 = 0, mad = 0;
  for (double v : x) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
    mad += std::abs(d);
  }
  m2 /= nd;
  m3 /= nd;
  m4 /= nd;
  mad /= nd;

  // nearest rank: the ceil(p/100 * n)-th smallest value
  auto percentile = [&](std::size_t p) {
    const std::size_t rank = std::max<std::size_t>(1, (p * n + 99) / 100);
    return x[rank - 1];
  };

  const auto disc = discretize_roi(volume, mask, spec);
  std::vector<double> hist(static_cast<std::size_t>(disc.numGrayLevels), 0.0);
  for (int l : disc.levels) {
    if (l > 0) hist[static_cast<std::size_t>(l - 1)] += 1.0;
  }
  double entropy = 0, uniformity = 0;
  for (double c : hist) {
    const double p = c / nd;
    entropy -= xlog2x(p);
    uniformity += p * p;
  }

  const auto cls = FeatureClass::FirstOrder;
  FeatureMap out;
  put(out, cls, "10Percentile", percentile(10));
  put(out, cls, "90Percentile", percentile(90));
  put(out, cls, "Energy", energy);
  put(out, cls, "Entropy", entropy);
  put(out, cls, "Kurtosis", m2 > 0 ? FeatureValue(m4 / (m2 * m2)) : std::nullopt);
  put(out, cls, "Maximum", x.back());
  put(out, cls, "Mean", mean);
  put(out, cls, "MeanAbsoluteDeviation", mad);
  put(out, cls, "Median", x[(n - 1) / 2]);
  put(out, cls, "Minimum", x.front());
  put(out, cls, "Range", x.back() - x.front());
  put(out, cls, "RootMeanSquared", std::sqrt(energy / nd));
  put(out, cls, "Skewness", m2 > 0 ? FeatureValue(m3 / std::pow(m2, 1.5)) : std::nullopt);
  put(out, cls, "StandardDeviation", std::sqrt(m2));
  put(out, cls, "Uniformity", uniformity);
  put(out, cls, "Variance", m2);
  return out;
}

FeatureMap shape_features(const RoiMask& mask) {
  const Dims& d = mask.dims;
  const Spacing& s = mask.spacing;
  const std::array<double, 3> face_area{s[1] * s[2], s[0] * s[2], s[0] * s[1]};

  struct Point {
    std::size_t x, y, z;
  };
  std::vector<Point> surface;
  std::size_t count = 0;
  double area = 0.0;
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  Eigen::Matrix3d outer = Eigen::Matrix3d::Zero();

  for (std::size_t z = 0; z < d[2]; ++z) {
    for (std::size_t y = 0; y < d[1]; ++y) {
      for (std::size_t x = 0; x < d[0]; ++x) {
        if (!mask.inside(x, y, z)) continue;
        ++count;
        const Eigen::Vector3d p(static_cast<double>(x) * s[0], static_cast<double>(y) * s[1],
                                static_cast<double>(z) * s[2]);
        sum += p;
        outer += p * p.transpose();
        const std::array<std::size_t, 3> c{x, y, z};
        bool exposed = false;
        for (std::size_t a = 0; a < 3; ++a) {
          for (int step : {-1, 1}) {
            auto n = c;
            bool open;
            if (step < 0) {
              open = n[a] == 0;
              if (!open) --n[a];
            } else {
              open = n[a] + 1 >= d[a];
              if (!open) ++n[a];
            }
            if (!open) open = !mask.inside(n[0], n[1], n[2]);
            if (open) {
              area += face_area[a];
              exposed = true;
            }
          }
        }
        if (exposed) surface.push_back({x, y, z});
      }
    }
  }
  if (count == 0) throw Error(ErrorCode::EmptyMask, "ROI holds no voxel");

  const double volume = static_cast<double>(count) * s[0] * s[1] * s[2];

  // Maximum diameters over surface voxel centres: 3D, and within axial
  // (same z), coronal (same y) and sagittal (same x) planes.
  double max3 = 0, max_slice = 0, max_column = 0, max_row = 0;
  for (std::size_t i = 0; i < surface.size(); ++i) {
    for (std::size_t j = i + 1; j < surface.size(); ++j) {
      const double dx = (static_cast<double>(surface[i].x) - static_cast<double>(surface[j].x)) * s[0];
      const double dy = (static_cast<double>(surface[i].y) - static_cast<double>(surface[j].y)) * s[1];
      const double dz = (static_cast<double>(surface[i].z) - static_cast<double>(surface[j].z)) * s[2];
      const double d2 = dx * dx + dy * dy + dz * dz;
      max3 = std::max(max3, d2);
      if (surface[i].z == surface[j].z) max_slice = std::max(max_slice, d2);
      if (surface[i].y == surface[j].y) max_column = std::max(max_column, d2);
      if (surface[i].x == surface[j].x) max_row = std::max(max_row, d2);
    }
  }

  const double nd = static_cast<double>(count);
  const Eigen::Vector3d mean = sum / nd;
  const Eigen::Matrix3d cov = outer / nd - mean * mean.transpose();
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov, Eigen::EigenvaluesOnly);
  const double major = std::max(0.0, eig.eigenvalues()(2));
  const double minor = std::max(0.0, eig.eigenvalues()(1));

  const auto cls = FeatureClass::Shape;
  FeatureMap out;
  put(out, cls, "Elongation", major > 0 ? FeatureValue(std::sqrt(minor / major)) : std::nullopt);
  put(out, cls, "MajorAxisLength", 4.0 * std::sqrt(major));
  put(out, cls, "Maximum2DDiameterColumn", std::sqrt(max_column));
  put(out, cls, "Maximum2DDiameterRow", std::sqrt(max_row));
  put(out, cls, "Maximum2DDiameterSlice", std::sqrt(max_slice));
  put(out, cls, "Maximum3DDiameter", std::sqrt(max3));
  put(out, cls, "MinorAxisLength", 4.0 * std::sqrt(minor));
  put(out, cls, "Sphericity", std::cbrt(36.0 * std::numbers::pi * volume * volume) / area);
  put(out, cls, "SurfaceArea", area);
  put(out, cls, "SurfaceVolumeRatio", area / volume);
  put(out, cls, "Volume", volume);
  return out;
}

FeatureMap glcm_features(const GlcMatrix& m) {
  const int ng = m.numGrayLevels;
  std::vector<double> px(static_cast<std::size_t>(ng), 0.0);
  std::vector<double> p_diff(static_cast<std::size_t>(ng), 0.0);
  std::vector<double> p_sum(static_cast<std::size_t>(2 * ng + 1), 0.0);
  double energy = 0, entropy = 0, contrast = 0, idm = 0, id = 0, autocorr = 0, max_p = 0;
  for (int i = 1; i <= ng; ++i) {
    for (int j = 1; j <= ng; ++j) {
      const double p = m.p(i, j);
      const int k = std::abs(i - j);
      px[static_cast<std::size_t>(i - 1)] += p;
      p_diff[static_cast<std::size_t>(k)] += p;
      p_sum[static_cast<std::size_t>(i + j)] += p;
      energy += p * p;
      entropy -= xlog2x(p);
      contrast += static_cast<double>(k * k) * p;
      idm += p / (1.0 + k * k);
      id += p / (1.0 + k);
      autocorr += static_cast<double>(i * j) * p;
      max_p = std::max(max_p, p);
    }
  }
  double mu = 0;
  for (int i = 1; i <= ng; ++i) mu += i * px[static_cast<std::size_t>(i - 1)];
  double var = 0;
  for (int i = 1; i <= ng; ++i) var += (i - mu) * (i - mu) * px[static_cast<std::size_t>(i - 1)];

  double prominence = 0, shade = 0, tendency = 0, cov = 0;
  for (int i = 1; i <= ng; ++i) {
    for (int j = 1; j <= ng; ++j) {
      const double p = m.p(i, j);
      const double t = i + j - 2.0 * mu;
      cov += (i - mu) * (j - mu) * p;
      tendency += t * t * p;
      shade += t * t * t * p;
      prominence += t * t * t * t * p;
    }
  }
  double diff_avg = 0, diff_entropy = 0, inv_var = 0;
  for (int k = 0; k < ng; ++k) {
    const double p = p_diff[static_cast<std::size_t>(k)];
    diff_avg += k * p;
    diff_entropy -= xlog2x(p);
    if (k > 0) inv_var += p / (static_cast<double>(k) * k);
  }
  double sum_entropy = 0;
  for (double p : p_sum) sum_entropy -= xlog2x(p);

  const auto cls = FeatureClass::Glcm;
  FeatureMap out;
  put(out, cls, "Autocorrelation", autocorr);
  put(out, cls, "ClusterProminence", prominence);
  put(out, cls, "ClusterShade", shade);
  put(out, cls, "ClusterTendency", tendency);
  put(out, cls, "Contrast", contrast);
  put(out, cls, "Correlation", var > 0 ? FeatureValue(cov / var) : std::nullopt);
  put(out, cls, "DifferenceAverage", diff_avg);
  put(out, cls, "DifferenceEntropy", diff_entropy);
  put(out, cls, "Id", id);
  put(out, cls, "Idm", idm);
  put(out, cls, "InverseVariance", inv_var);
  put(out, cls, "JointAverage", mu);
  put(out, cls, "JointEnergy", energy);
  put(out, cls, "JointEntropy", entropy);
  put(out, cls, "MaximumProbability", max_p);
  put(out, cls, "SumEntropy", sum_entropy);
  return out;
}

FeatureMap glrlm_features(const GlrlMatrix& m) {
  return size_matrix_features(FeatureClass::Glrlm, kRunNames, m.counts, m.numGrayLevels, m.maxRunLength, m.totalRuns,
                              static_cast<double>(m.roiVoxels) * static_cast<double>(m.numDirections));
}

FeatureMap glszm_features(const GlszMatrix& m) {
  return size_matrix_features(FeatureClass::Glszm, kZoneNames, m.counts, m.numGrayLevels, m.maxZoneSize,
                              m.totalZones, static_cast<double>(m.roiVoxels));
}

FeatureMap extract_features(const VolumeGrid& filtered, const RoiMask& mask, const DiscretizationSpec& spec,
                            Dimensionality dim) {
  FeatureMap out = shape_features(mask);
  out.merge(firstorder_features(filtered, mask, spec));
  const auto disc = discretize_roi(filtered, mask, spec);
  out.merge(glcm_features(build_glcm(disc, dim)));
  out.merge(glrlm_features(build_glrlm(disc, dim)));
  out.merge(glszm_features(build_glszm(disc, dim)));
  return out;
}

}  // namespace radrep
