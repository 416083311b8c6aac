#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <unistd.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "radrep/error.hpp"
#include "radrep/volume_io.hpp"

using namespace radrep;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("radrep_io_" + std::to_string(::getpid()))) { fs::create_directories(path); }
  ~TempDir() { fs::remove_all(path); }
};

template <typename T>
fs::path write_nrrd(const fs::path& p, const std::string& header, const std::vector<T>& payload) {
  std::ofstream f(p, std::ios::binary);
  f << header << "\n";
  f.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size() * sizeof(T)));
  return p;
}

std::string header(const std::string& type, const std::string& sizes, const std::string& geometry,
                   const std::string& extra = "") {
  return "NRRD0004\n# fixture\ntype: " + type + "\ndimension: 3\nsizes: " + sizes + "\n" + geometry +
         "\nendian: little\nencoding: raw\n" + extra;
}

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("read_volume: float fixture") {
  TempDir dir;
  const auto p = write_nrrd(dir.path / "a.nrrd", header("float", "2 2 1", "spacings: 1 1 3"),
                            std::vector<float>{1, 2, 3, 4});
  const auto v = read_volume(p);
  CHECK(v.dims == Dims{2, 2, 1});
  CHECK(v.spacing == Spacing{1, 1, 3});
  CHECK(v.values == std::vector<double>{1, 2, 3, 4});
  CHECK(v.at(1, 1, 0) == 4.0);
}

TEST_CASE("read_volume: diagonal space directions") {
  TempDir dir;
  const auto p = write_nrrd(dir.path / "b.nrrd",
                            header("short", "1 1 2", "space: left-posterior-superior\nspace directions: (0.5,0,0) (0,0.5,0) (0,0,3.0)"),
                            std::vector<std::int16_t>{-3, 7});
  const auto v = read_volume(p);
  CHECK(v.spacing == Spacing{0.5, 0.5, 3.0});
  CHECK(v.values == std::vector<double>{-3, 7});

  const auto skew = write_nrrd(dir.path / "c.nrrd", header("short", "1 1 2", "space directions: (0.5,0.1,0) (0,0.5,0) (0,0,3)"),
                               std::vector<std::int16_t>{1, 2});
  CHECK(code_of([&] { read_volume(skew); }) == ErrorCode::UnsupportedEncoding);
}

TEST_CASE("read_volume: malformed inputs") {
  TempDir dir;
  const auto short_payload =
      write_nrrd(dir.path / "s.nrrd", header("float", "3 3 3", "spacings: 1 1 1"), std::vector<float>(26, 0.f));
  CHECK(code_of([&] { read_volume(short_payload); }) == ErrorCode::PayloadSizeMismatch);

  const auto gz = write_nrrd(dir.path / "g.nrrd", "NRRD0004\ntype: float\ndimension: 3\nsizes: 1 1 1\nspacings: 1 1 1\nencoding: gzip\n",
                             std::vector<float>{1});
  CHECK(code_of([&] { read_volume(gz); }) == ErrorCode::UnsupportedEncoding);

  const auto nospacing = write_nrrd(dir.path / "n.nrrd", "NRRD0004\ntype: float\ndimension: 3\nsizes: 1 1 1\nencoding: raw\n",
                                    std::vector<float>{1});
  CHECK(code_of([&] { read_volume(nospacing); }) == ErrorCode::MissingHeaderField);

  const auto nan = write_nrrd(dir.path / "nan.nrrd", header("float", "2 1 1", "spacings: 1 1 1"),
                              std::vector<float>{1.f, std::numeric_limits<float>::quiet_NaN()});
  CHECK(code_of([&] { read_volume(nan); }) == ErrorCode::NonFiniteValue);

  const auto twod = write_nrrd(dir.path / "2d.nrrd", "NRRD0004\ntype: float\ndimension: 2\nsizes: 1 1\nspacings: 1 1\nencoding: raw\n",
                               std::vector<float>{1});
  CHECK(code_of([&] { read_volume(twod); }) == ErrorCode::UnsupportedEncoding);

  CHECK(code_of([&] { read_volume(dir.path / "missing.nrrd"); }) == ErrorCode::IoError);
}

TEST_CASE("read_mask") {
  TempDir dir;
  std::vector<std::int16_t> one(8, 0);
  one[5] = 1;
  const auto p = write_nrrd(dir.path / "m.nrrd", header("short", "2 2 2", "spacings: 1 1 1"), one);
  const auto m = read_mask(p, Structure::Tumor);
  CHECK(m.voxel_count() == 1);
  CHECK(m.structure == Structure::Tumor);

  const auto empty = write_nrrd(dir.path / "e.nrrd", header("short", "2 2 2", "spacings: 1 1 1"), std::vector<std::int16_t>(8, 0));
  CHECK(code_of([&] { read_mask(empty, Structure::Tumor); }) == ErrorCode::EmptyMask);

  auto two = one;
  two[0] = 2;
  const auto bad = write_nrrd(dir.path / "b.nrrd", header("short", "2 2 2", "spacings: 1 1 1"), two);
  CHECK(code_of([&] { read_mask(bad, Structure::Tumor); }) == ErrorCode::NonBinaryLabel);
}

TEST_CASE("check_geometry") {
  VolumeGrid img({4, 4, 2}, {1, 1, 3}, std::vector<double>(32));
  CHECK(check_geometry(img, RoiMask({4, 4, 2}, {1, 1, 3}, std::vector<std::uint8_t>(32, 1))));
  CHECK(check_geometry(img, RoiMask({4, 4, 2}, {1, 1, 3.000000001}, std::vector<std::uint8_t>(32, 1))));
  CHECK_FALSE(check_geometry(img, RoiMask({4, 4, 2}, {1, 1, 3.1}, std::vector<std::uint8_t>(32, 1))));
  VolumeGrid big({64, 64, 20}, {1, 1, 1}, std::vector<double>(64 * 64 * 20));
  CHECK_FALSE(check_geometry(big, RoiMask({64, 64, 21}, {1, 1, 1}, std::vector<std::uint8_t>(64 * 64 * 21, 1))));
}

TEST_CASE("write / read round trip for every payload type") {
  TempDir dir;
  VolumeGrid v({3, 2, 2}, {0.5, 0.75, 3.0}, {0, 1, -2, 3, 4, 5, 6, 7, 8, 9, 10, -11});
  for (auto t : {NrrdType::Short, NrrdType::Int, NrrdType::Float, NrrdType::Double}) {
    const auto p = dir.path / ("v" + std::to_string(static_cast<int>(t)) + ".nrrd");
    write_volume(p, v, t);
    const auto back = read_volume(p);
    CHECK(back.dims == v.dims);
    CHECK(back.spacing == v.spacing);
    CHECK(back.values == v.values);
    CHECK(content_digest(back) == content_digest(v));
  }
  RoiMask m({3, 2, 2}, {0.5, 0.75, 3.0}, {0, 1, 1, 0, 0, 0, 1, 0, 0, 0, 0, 1}, Structure::WholeGland);
  write_mask(dir.path / "m.nrrd", m);
  const auto mb = read_mask(dir.path / "m.nrrd", Structure::WholeGland);
  CHECK(mb.labels == m.labels);
  CHECK(content_digest(mb) == content_digest(m));
}

TEST_CASE("structure names") {
  for (auto s : {Structure::Tumor, Structure::PeripheralZone, Structure::WholeGland, Structure::MuscleReference}) {
    CHECK(parse_structure(structure_name(s)) == s);
  }
  CHECK_THROWS_AS(parse_structure("Liver"), Error);
}
