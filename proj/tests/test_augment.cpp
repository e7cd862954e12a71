#include <cmath>
#include <random>

#include "doctest.h"
#include "spdh/augment.hpp"
#include "spdh/synth.hpp"
#include "testutil.hpp"

using namespace spdh;

namespace {
PinholeIntrinsics cam64() {
  return {80.0, 80.0, 32.0, 32.0, 64, 64};
}
}  // namespace

TEST_CASE("depth_to_pointcloud: zero depth gives an empty cloud") {
  CHECK(depth_to_pointcloud(DepthImage(64, 64), cam64()).empty());
}

TEST_CASE("depth_to_pointcloud: one point per valid pixel, row-major") {
  const PinholeIntrinsics K = cam64();
  DepthImage depth(64, 64);
  std::mt19937 rng(2);
  size_t nonzero = 0;
  for (auto& d : depth.data)
    if (rng() % 2) {
      d = 500.0f + (rng() % 2000);
      ++nonzero;
    }
  const auto cloud = depth_to_pointcloud(depth, K);
  CHECK(cloud.size() == nonzero);
  // row-major order: Z values must match the depth scan order
  size_t k = 0;
  for (float d : depth.data)
    if (d > 0.0f) CHECK(cloud[k++].z() == doctest::Approx(d));
}

TEST_CASE("depth_to_pointcloud: fronto-parallel plane render has constant Z") {
  PrimScene prims;
  prims.plane = PlanePrim{{0.0, 0.0, 900.0}, {0.0, 0.0, 1.0}};
  const DepthImage depth = render_prims(prims, cam64(), {0.0, 0.0}, 0);
  for (const auto& p : depth_to_pointcloud(depth, cam64()))
    CHECK(p.z() == doctest::Approx(900.0));
}

TEST_CASE("apply_rigid: identity leaves everything unchanged") {
  std::vector<Eigen::Vector3d> cloud{{1, 2, 3}, {4, 5, 6}};
  JointSet3D joints;
  joints.names = {"a"};
  joints.positions_mm = {{7, 8, 9}};
  joints.visible = {1};
  apply_rigid(cloud, joints, RigidTransform::identity());
  CHECK(cloud[0] == Eigen::Vector3d(1, 2, 3));
  CHECK(cloud[1] == Eigen::Vector3d(4, 5, 6));
  CHECK(joints.positions_mm[0] == Eigen::Vector3d(7, 8, 9));
}

TEST_CASE("apply_rigid: +80 mm X translation shifts X exactly") {
  std::vector<Eigen::Vector3d> cloud{{10, 20, 30}, {-5, 0, 100}};
  JointSet3D joints;
  joints.names = {"a"};
  joints.positions_mm = {{1, 2, 3}};
  joints.visible = {1};
  RigidTransform t;
  t.translation = {80.0, 0.0, 0.0};
  apply_rigid(cloud, joints, t);
  CHECK(cloud[0] == Eigen::Vector3d(90, 20, 30));
  CHECK(cloud[1] == Eigen::Vector3d(75, 0, 100));
  CHECK(joints.positions_mm[0] == Eigen::Vector3d(81, 2, 3));
}

TEST_CASE("apply_rigid: rejects non-rigid transforms") {
  std::vector<Eigen::Vector3d> cloud{{1, 1, 1}};
  JointSet3D joints;
  joints.names = {"a"};
  joints.positions_mm = {{0, 0, 0}};
  joints.visible = {1};
  RigidTransform scaled;
  scaled.rotation = 2.0 * Eigen::Matrix3d::Identity();
  CHECK_THROWS_AS(apply_rigid(cloud, joints, scaled), Error);
  RigidTransform mirrored;
  mirrored.rotation = Eigen::Vector3d(1, 1, -1).asDiagonal();
  CHECK_THROWS_AS(apply_rigid(cloud, joints, mirrored), Error);
}

TEST_CASE("apply_rigid: pairwise distances preserved to 1e-6 relative") {
  Rng rng(6);
  AugmentSpec spec;
  std::vector<Eigen::Vector3d> cloud;
  for (int i = 0; i < 200; ++i)
    cloud.emplace_back(rng.uniform(-500, 500), rng.uniform(-500, 500), rng.uniform(600, 3000));
  JointSet3D joints;
  joints.names = {"a"};
  joints.positions_mm = {{0, 0, 1500}};
  joints.visible = {1};
  auto before = cloud;
  const RigidTransform t = sample_augment(spec, rng);
  apply_rigid(cloud, joints, t);
  for (size_t i = 0; i < cloud.size(); i += 7)
    for (size_t j = i + 1; j < cloud.size(); j += 11) {
      const double d0 = (before[i] - before[j]).norm();
      const double d1 = (cloud[i] - cloud[j]).norm();
      CHECK(std::abs(d1 - d0) <= 1e-6 * std::max(1.0, d0));
    }
}

TEST_CASE("sample_augment: draws stay inside the configured ranges") {
  AugmentSpec spec;
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    const RigidTransform t = sample_augment(spec, rng);
    const double angle = std::acos(std::clamp((t.rotation.trace() - 1.0) / 2.0, -1.0, 1.0));
    CHECK(angle <= 5.0 * M_PI / 180.0 + 1e-9);
    const double shift = t.translation.norm();
    CHECK(shift <= 80.0 + 1e-9);
    // translation is along X or Z only
    CHECK(t.translation.y() == 0.0);
    CHECK((t.translation.x() == 0.0 || t.translation.z() == 0.0));
  }
}

TEST_CASE("sample_augment: uniform per axis choice (chi-square, 10k draws)") {
  AugmentSpec spec;
  Rng rng(12345);
  const int kBins = 10;
  std::vector<int> rot_bins(kBins, 0), trans_bins(kBins, 0);
  int rot_x = 0, trans_x = 0;
  const int N = 10000;
  for (int i = 0; i < N; ++i) {
    const RigidTransform t = sample_augment(spec, rng);
    const Eigen::AngleAxisd aa(t.rotation);
    double signed_angle = aa.angle();
    if (aa.axis().sum() < 0) signed_angle = -signed_angle;
    const int rb = std::clamp(static_cast<int>((signed_angle * 180.0 / M_PI + 5.0) / 1.0), 0,
                              kBins - 1);
    ++rot_bins[rb];
    if (std::abs(aa.axis().x()) > 0.5) ++rot_x;
    const double shift = t.translation.x() != 0.0 ? t.translation.x() : t.translation.z();
    if (t.translation.x() != 0.0) ++trans_x;
    const int tb = std::clamp(static_cast<int>((shift + 80.0) / 16.0), 0, kBins - 1);
    ++trans_bins[tb];
  }
  auto chi2 = [&](const std::vector<int>& bins) {
    const double expected = static_cast<double>(N) / bins.size();
    double c = 0.0;
    for (int b : bins) c += (b - expected) * (b - expected) / expected;
    return c;
  };
  // chi^2 with 9 dof: p > 0.001 <=> statistic < 27.88
  CHECK(chi2(rot_bins) < 27.88);
  CHECK(chi2(trans_bins) < 27.88);
  // fair coin for the axis choices (binomial, ~5 sigma window)
  CHECK(std::abs(rot_x - N / 2) < 250);
  CHECK(std::abs(trans_x - N / 2) < 250);
}

TEST_CASE("pointcloud_to_depth: identity round trip reproduces valid pixels exactly") {
  const PinholeIntrinsics K = cam64();
  PrimScene prims;
  prims.spheres.push_back({{0.0, 0.0, 1000.0}, 250.0});
  const DepthImage depth = render_prims(prims, K, {0.0, 0.0}, 0);
  const auto cloud = depth_to_pointcloud(depth, K);
  const DepthImage back = pointcloud_to_depth(cloud, K, 64, 64);
  CHECK(back.data == depth.data);
}

TEST_CASE("pointcloud_to_depth: z-buffer keeps the nearer point") {
  const PinholeIntrinsics K = cam64();
  // both points project to the principal point pixel
  const std::vector<Eigen::Vector3d> cloud{{0.0, 0.0, 1100.0}, {0.0, 0.0, 900.0}};
  const DepthImage out = pointcloud_to_depth(cloud, K, 64, 64);
  CHECK(out.at(32, 32) == 900.0f);
}

TEST_CASE("pointcloud_to_depth: drops behind-camera and off-raster points") {
  const PinholeIntrinsics K = cam64();
  const std::vector<Eigen::Vector3d> cloud{
      {0.0, 0.0, -500.0}, {0.0, 0.0, 0.0}, {100000.0, 0.0, 500.0}};
  const DepthImage out = pointcloud_to_depth(cloud, K, 64, 64);
  for (float d : out.data) CHECK(d == 0.0f);
}

TEST_CASE("augment_frame: rotation opens zero/invalid holes, never fake values") {
  const PinholeIntrinsics K = cam64();
  PrimScene prims;
  prims.plane = PlanePrim{{0.0, 0.0, 1500.0}, {0.0, 0.0, 1.0}};
  const DepthImage depth = render_prims(prims, K, {0.0, 0.0}, 0);
  JointSet3D joints;
  joints.names = {"a"};
  joints.positions_mm = {{0.0, 0.0, 1500.0}};
  joints.visible = {1};
  AugmentSpec spec;
  spec.rot_lo_deg = 5.0;  // force a real rotation
  spec.rot_hi_deg = 5.0;
  spec.trans_lo_mm = 0.0;
  spec.trans_hi_mm = 0.0;
  const AugmentedFrame out = augment_frame(depth, joints, K, spec, 7, 0);
  size_t holes = 0, filled = 0;
  for (float d : out.depth.data) (d == 0.0f ? holes : filled)++;
  CHECK(holes > 0);   // reprojection opens gaps
  CHECK(filled > 2000);
  // the label moved with the cloud
  CHECK((out.transform.apply(joints.positions_mm[0]) - out.joints.positions_mm[0]).norm() <=
        1e-12);
  // per-frame seeding is reproducible
  const AugmentedFrame again = augment_frame(depth, joints, K, spec, 7, 0);
  CHECK(again.depth.data == out.depth.data);
  const AugmentedFrame other = augment_frame(depth, joints, K, spec, 7, 1);
  CHECK(other.depth.data != out.depth.data);
}
