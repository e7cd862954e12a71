#include <cmath>
#include <random>

#include "doctest.h"
#include "spdh/geometry.hpp"
#include "testutil.hpp"

using namespace spdh;

namespace {
PinholeIntrinsics desk() {
  return {365.0, 365.0, 256.0, 212.0, 512, 424};
}
}  // namespace

TEST_CASE("backproject principal point and sentinel") {
  const PinholeIntrinsics K = desk();
  DepthImage depth(K.width, K.height);
  depth.at(256, 212) = 1000.0f;
  depth.at(10, 10) = 0.0f;
  const XyzImage xyz = backproject(depth, K);
  CHECK(xyz.at(256, 212).x() == doctest::Approx(0.0));
  CHECK(xyz.at(256, 212).y() == doctest::Approx(0.0));
  CHECK(xyz.at(256, 212).z() == 1000.0f);
  CHECK(xyz.is_valid(256, 212));
  CHECK(!xyz.is_valid(10, 10));
  CHECK(xyz.at(10, 10) == Eigen::Vector3f(0, 0, 0));
}

TEST_CASE("backproject unit-tangent pixel") {
  // (u - cx)/fx = 1  =>  X = d; wide raster so column 621 exists
  const PinholeIntrinsics K{365.0, 365.0, 256.0, 212.0, 1024, 424};
  DepthImage depth(K.width, K.height);
  depth.at(365 + 256, 212) = 1000.0f;
  const XyzImage xyz = backproject(depth, K);
  CHECK(xyz.at(621, 212).x() == doctest::Approx(1000.0));
  CHECK(xyz.at(621, 212).y() == doctest::Approx(0.0));
  CHECK(xyz.at(621, 212).z() == 1000.0f);
}

TEST_CASE("backproject dimension mismatch throws") {
  DepthImage depth(100, 100);
  CHECK_THROWS_AS(backproject(depth, desk()), Error);
}

TEST_CASE("project optical axis, hand value, and behind-camera error") {
  const PinholeIntrinsics K = desk();
  const Eigen::Vector2d c = project({0.0, 0.0, 1500.0}, K);
  CHECK(c.x() == doctest::Approx(256.0));
  CHECK(c.y() == doctest::Approx(212.0));
  CHECK(project({1000.0, 0.0, 1000.0}, K).x() == doctest::Approx(621.0));
  CHECK_THROWS_AS(project({0.0, 0.0, -1.0}, K), Error);
  CHECK_THROWS_AS(project({0.0, 0.0, 0.0}, K), Error);
}

TEST_CASE("project(backproject) identity on valid pixels") {
  const PinholeIntrinsics K = desk();
  DepthImage depth(K.width, K.height);
  std::mt19937 rng(7);
  std::uniform_real_distribution<float> dist(1.0f, 4900.0f);
  for (auto& d : depth.data) d = dist(rng);
  const XyzImage xyz = backproject(depth, K);
  for (int trial = 0; trial < 1000; ++trial) {
    const int u = static_cast<int>(rng() % K.width);
    const int v = static_cast<int>(rng() % K.height);
    // double-precision algebra inverts exactly
    const Eigen::Vector2d uv = project(backproject_pixel(u, v, depth.at(u, v), K), K);
    CHECK(std::abs(uv.x() - u) <= 1e-9);
    CHECK(std::abs(uv.y() - v) <= 1e-9);
    // the stored float32 image satisfies the half-pixel type invariant
    const Eigen::Vector3f p = xyz.at(u, v);
    const Eigen::Vector2d uvf = project(p.cast<double>(), K);
    CHECK(std::abs(uvf.x() - u) <= 0.5);
    CHECK(std::abs(uvf.y() - v) <= 0.5);
    CHECK(p.z() == depth.at(u, v));  // Z channel equals depth exactly
  }
  CHECK(xyz.valid_count() == static_cast<size_t>(K.width) * K.height);
}

TEST_CASE("validity mask cardinality equals nonzero depth count") {
  const PinholeIntrinsics K = desk();
  DepthImage depth(K.width, K.height);
  std::mt19937 rng(21);
  size_t nonzero = 0;
  for (auto& d : depth.data) {
    if (rng() % 3 == 0) {
      d = 1000.0f + (rng() % 1000);
      ++nonzero;
    }
  }
  CHECK(backproject(depth, K).valid_count() == nonzero);
}

TEST_CASE("normalize_xyz endpoints, midpoint, and sentinel") {
  XyzImage img(2, 2);
  NormalizationSpec spec;  // X,Y in [-2000,2000], Z in [500,3380]
  auto set = [&](int u, int v, float x, float y, float z, bool valid) {
    const size_t i = 3 * (static_cast<size_t>(v) * img.width + u);
    img.xyz[i] = x;
    img.xyz[i + 1] = y;
    img.xyz[i + 2] = z;
    img.valid[static_cast<size_t>(v) * img.width + u] = valid ? 1 : 0;
  };
  set(0, 0, -2000.0f, 2000.0f, 1940.0f, true);  // lo, hi, Z midpoint
  set(1, 0, 0.0f, 0.0f, 500.0f, true);
  set(0, 1, 123.0f, 456.0f, 789.0f, false);  // invalid
  const NormalizedXyz out = normalize_xyz(img, spec);
  CHECK(out.data[0] == 0.0f);
  CHECK(out.data[1] == 1.0f);
  CHECK(out.data[2] == doctest::Approx(0.5));  // (1940-500)/2880
  CHECK(out.data[3 * 1 + 2] == 0.0f);          // Z at lower bound
  CHECK(out.data[3 * 2 + 0] == 0.0f);          // invalid pixel all zero
  CHECK(out.data[3 * 2 + 1] == 0.0f);
  CHECK(out.data[3 * 2 + 2] == 0.0f);
}

TEST_CASE("normalize_xyz is monotone and idempotent with unit bounds") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<float> dist(-3000.0f, 4000.0f);
  XyzImage img(16, 8);
  for (auto& v : img.xyz) v = dist(rng);
  for (auto& m : img.valid) m = 1;
  NormalizationSpec spec;
  const NormalizedXyz once = normalize_xyz(img, spec);
  for (int c = 0; c < 3; ++c)
    for (size_t i = 0; i + 1 < img.valid.size(); ++i) {
      const float a = img.xyz[3 * i + c], b = img.xyz[3 * (i + 1) + c];
      const float na = once.data[3 * i + c], nb = once.data[3 * (i + 1) + c];
      if (a <= b) CHECK(na <= nb);
    }
  // renormalizing [0,1] data with unit bounds changes nothing
  XyzImage unit(img.width, img.height);
  unit.xyz = once.data;
  unit.valid = img.valid;
  NormalizationSpec unit_spec;
  unit_spec.x_lo = unit_spec.y_lo = unit_spec.z_lo = 0.0;
  unit_spec.x_hi = unit_spec.y_hi = unit_spec.z_hi = 1.0;
  const NormalizedXyz twice = normalize_xyz(unit, unit_spec);
  CHECK(twice.data == once.data);
}

TEST_CASE("normalize_xyz per-image min-max mode") {
  XyzImage img(2, 1);
  img.xyz = {10.0f, 0.0f, 100.0f, 20.0f, 5.0f, 300.0f};
  img.valid = {1, 1};
  NormalizationSpec spec;
  spec.mode = NormalizationSpec::Mode::kPerImageMinMax;
  const NormalizedXyz out = normalize_xyz(img, spec);
  CHECK(out.data[0] == 0.0f);
  CHECK(out.data[3] == 1.0f);
  CHECK(out.data[2] == 0.0f);
  CHECK(out.data[5] == 1.0f);
}

TEST_CASE("resize_depth identity is bit-identical") {
  DepthImage depth(32, 16);
  std::mt19937 rng(3);
  for (auto& d : depth.data) d = static_cast<float>(rng() % 5000);
  const DepthImage same = resize_depth(depth, 32, 16);
  CHECK(same.data == depth.data);
}

TEST_CASE("resize_depth 512x424 -> 384x192 stays in the source value set") {
  DepthImage depth(512, 424);
  std::mt19937 rng(11);
  for (auto& d : depth.data) d = static_cast<float>(rng() % 4000);
  const DepthImage out = resize_depth(depth, 384, 192);
  CHECK(out.width == 384);
  CHECK(out.height == 192);
  for (int v = 0; v < out.height; ++v)
    for (int u = 0; u < out.width; ++u) {
      const int su = std::min(static_cast<int>((u + 0.5) * 512.0 / 384.0), 511);
      const int sv = std::min(static_cast<int>((v + 0.5) * 424.0 / 192.0), 423);
      CHECK(out.at(u, v) == depth.at(su, sv));
    }
}

TEST_CASE("rescaled intrinsics reprojection oracle (exhaustive 16x16)") {
  PinholeIntrinsics K{20.0, 20.0, 8.0, 8.0, 16, 16};
  DepthImage depth(16, 16);
  std::mt19937 rng(13);
  for (auto& d : depth.data) d = 500.0f + static_cast<float>(rng() % 2000);
  const int nw = 12, nh = 6;
  const PinholeIntrinsics Ks = K.rescaled(nw, nh);
  CHECK(Ks.fx == doctest::Approx(20.0 * nw / 16));
  CHECK(Ks.cx == doctest::Approx(8.0 * nw / 16));
  const XyzImage xyz = backproject(depth, K);
  for (int v = 0; v < 16; ++v)
    for (int u = 0; u < 16; ++u) {
      const Eigen::Vector2d uv = project(xyz.at(u, v).cast<double>(), Ks);
      // must land within 1 px of where the source pixel maps
      const double eu = (u + 0.5) * nw / 16.0 - 0.5;
      const double ev = (v + 0.5) * nh / 16.0 - 0.5;
      CHECK(std::abs(uv.x() - eu) <= 1.0);
      CHECK(std::abs(uv.y() - ev) <= 1.0);
    }
}

TEST_CASE("camera json round trip and validation") {
  testutil::TempDir tmp("camera");
  const PinholeIntrinsics K = desk();
  save_camera_json(tmp.path() / "cam.json", K);
  const PinholeIntrinsics L = load_camera_json(tmp.path() / "cam.json");
  CHECK(L.fx == K.fx);
  CHECK(L.fy == K.fy);
  CHECK(L.cx == K.cx);
  CHECK(L.cy == K.cy);
  CHECK(L.width == K.width);
  CHECK(L.height == K.height);

  PinholeIntrinsics bad = K;
  bad.fx = -1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = K;
  bad.cx = 600.0;  // outside [0, width)
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK_THROWS_AS(load_camera_json(tmp.path() / "nope.json"), Error);
}
