#include "spdh/augment.hpp"

#include <cmath>

namespace spdh {

void AugmentSpec::validate() const {
  SPDH_REQUIRE(rot_lo_deg <= rot_hi_deg, "augment: rotation range is empty");
  SPDH_REQUIRE(trans_lo_mm <= trans_hi_mm, "augment: translation range is empty");
}

std::vector<Eigen::Vector3d> depth_to_pointcloud(const DepthImage& depth,
                                                 const PinholeIntrinsics& K) {
  const XyzImage img = backproject(depth, K);
  std::vector<Eigen::Vector3d> cloud;
  cloud.reserve(img.valid_count());
  const size_t n = static_cast<size_t>(img.width) * img.height;
  for (size_t i = 0; i < n; ++i) {
    if (!img.valid[i]) continue;
    cloud.emplace_back(img.xyz[3 * i], img.xyz[3 * i + 1], img.xyz[3 * i + 2]);
  }
  return cloud;
}

RigidTransform sample_augment(const AugmentSpec& spec, Rng& rng,
                              const Eigen::Vector3d& centroid) {
  spec.validate();
  const bool rot_about_x = rng.coin();  // else Y
  const double angle = rng.uniform(spec.rot_lo_deg, spec.rot_hi_deg) * M_PI / 180.0;
  const bool trans_along_x = rng.coin();  // else Z
  const double shift = rng.uniform(spec.trans_lo_mm, spec.trans_hi_mm);

  RigidTransform t;
  t.rotation = rotation_about_axis(
      rot_about_x ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY(), angle);
  t.translation = trans_along_x ? Eigen::Vector3d(shift, 0.0, 0.0)
                                : Eigen::Vector3d(0.0, 0.0, shift);
  if (spec.about == AugmentSpec::About::kCentroid) {
    // rotate about the centroid, then translate: p' = R(p - c) + c + s
    t.translation += centroid - t.rotation * centroid;
  }
  return t;
}

void apply_rigid(std::vector<Eigen::Vector3d>& cloud, JointSet3D& joints,
                 const RigidTransform& transform) {
  SPDH_REQUIRE(transform.is_rigid(1e-9), "apply_rigid: transform is not rigid");
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(cloud.size()); ++i)
    cloud[i] = transform.apply(cloud[i]);
  for (auto& p : joints.positions_mm) p = transform.apply(p);
}

DepthImage pointcloud_to_depth(const std::vector<Eigen::Vector3d>& cloud,
                               const PinholeIntrinsics& K, int height, int width) {
  SPDH_REQUIRE(height > 0 && width > 0, "pointcloud_to_depth: empty raster");
  DepthImage out(width, height);
  auto splat = [&](std::vector<float>& buf, const Eigen::Vector3d& p) {
    if (!(p.z() > 0.0)) return;
    const long u = std::lround(K.fx * p.x() / p.z() + K.cx);
    const long v = std::lround(K.fy * p.y() / p.z() + K.cy);
    if (u < 0 || u >= width || v < 0 || v >= height) return;
    float& cell = buf[static_cast<size_t>(v) * width + u];
    const float z = static_cast<float>(p.z());
    if (cell == 0.0f || z < cell) cell = z;
  };
#ifdef _OPENMP
  // per-thread z-buffers merged with min(): deterministic under any schedule
  #pragma omp parallel
  {
    std::vector<float> local(out.data.size(), 0.0f);
    #pragma omp for schedule(static) nowait
    for (long long i = 0; i < static_cast<long long>(cloud.size()); ++i) splat(local, cloud[i]);
    #pragma omp critical
    {
      for (size_t i = 0; i < local.size(); ++i) {
        if (local[i] == 0.0f) continue;
        float& cell = out.data[i];
        if (cell == 0.0f || local[i] < cell) cell = local[i];
      }
    }
  }
#else
  for (const auto& p : cloud) splat(out.data, p);
#endif
  return out;
}

AugmentedFrame augment_frame(const DepthImage& depth, const JointSet3D& joints,
                             const PinholeIntrinsics& K, const AugmentSpec& spec,
                             std::uint64_t seed, std::uint64_t frame_id) {
  Rng rng(seed, frame_id);
  std::vector<Eigen::Vector3d> cloud = depth_to_pointcloud(depth, K);
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  if (spec.about == AugmentSpec::About::kCentroid && !cloud.empty()) {
    for (const auto& p : cloud) centroid += p;
    centroid /= static_cast<double>(cloud.size());
  }
  AugmentedFrame out;
  out.transform = sample_augment(spec, rng, centroid);
  out.joints = joints;
  apply_rigid(cloud, out.joints, out.transform);
  out.depth = pointcloud_to_depth(cloud, K, depth.height, depth.width);
  out.depth.max_range = depth.max_range;
  return out;
}

}  // namespace spdh
