#pragma once

#include <cstdint>
#include <vector>

#include "spdh/codec.hpp"
#include "spdh/geometry.hpp"
#include "spdh/rng.hpp"
#include "spdh/transform.hpp"

namespace spdh {

/// Training-time 3D augmentation: rotation of [lo,hi] degrees about X or Y,
/// translation of [lo,hi] mm along X or Z; each axis choice is a fair coin.
struct AugmentSpec {
  double rot_lo_deg = -5.0, rot_hi_deg = 5.0;
  double trans_lo_mm = -80.0, trans_hi_mm = 80.0;
  enum class About { kOrigin, kCentroid };
  About about = About::kOrigin;
  void validate() const;
};

/// One 3D point per valid depth pixel, row-major order, equal to the
/// backprojected XYZ values.
std::vector<Eigen::Vector3d> depth_to_pointcloud(const DepthImage& depth,
                                                 const PinholeIntrinsics& K);

/// Draw a transform from the spec. With About::kCentroid the rotation pivots
/// about `centroid` instead of the camera origin.
RigidTransform sample_augment(const AugmentSpec& spec, Rng& rng,
                              const Eigen::Vector3d& centroid = Eigen::Vector3d::Zero());

/// Apply one rigid transform to the cloud and the joint labels together.
/// Throws if the transform is not rigid (orthonormal R, det +1).
void apply_rigid(std::vector<Eigen::Vector3d>& cloud, JointSet3D& joints,
                 const RigidTransform& transform);

/// Project the cloud back to a depth image; per-pixel min-Z z-buffer, holes
/// stay 0, points behind the camera or off the raster are dropped.
DepthImage pointcloud_to_depth(const std::vector<Eigen::Vector3d>& cloud,
                               const PinholeIntrinsics& K, int height, int width);

/// Full per-frame augmentation. The RNG stream is (seed, frame_id) so
/// parallel runs reproduce byte-identically.
struct AugmentedFrame {
  DepthImage depth;
  JointSet3D joints;
  RigidTransform transform;
};
AugmentedFrame augment_frame(const DepthImage& depth, const JointSet3D& joints,
                             const PinholeIntrinsics& K, const AugmentSpec& spec,
                             std::uint64_t seed, std::uint64_t frame_id);

}  // namespace spdh
