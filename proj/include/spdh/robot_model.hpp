#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "spdh/codec.hpp"
#include "spdh/transform.hpp"

namespace spdh {

/// One revolute joint: fixed translation from its parent, then a rotation
/// about `axis` that affects all descendants.
struct ChainJoint {
  std::string name;
  int parent = -1;                 // -1 only for joint 0 (the base)
  Eigen::Vector3d xyz_mm = Eigen::Vector3d::Zero();
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
  double radius_mm = 40.0;         // capsule radius of the link ending at this joint
  double limit_lo = -M_PI, limit_hi = M_PI;
};

struct RobotChain {
  std::vector<ChainJoint> joints;
  RigidTransform base;  // camera <- base

  size_t size() const { return joints.size(); }
  void validate() const;
};

using JointAngles = std::vector<double>;

/// Per-joint rigid transforms (camera frame). Joint i's position is
/// transforms[i].translation; its rotation carries down the subtree.
std::vector<RigidTransform> fk_transforms(const RobotChain& chain, const JointAngles& q);

/// Joint positions in the camera frame; visibility initialized true.
JointSet3D forward_kinematics(const RobotChain& chain, const JointAngles& q);

RobotChain load_chain(const std::filesystem::path& path);
void save_chain(const std::filesystem::path& path, const RobotChain& chain);

/// Path of the bundled 16-joint dual-arm chain under a data directory.
inline std::filesystem::path bundled_chain_path(const std::filesystem::path& data_dir) {
  return data_dir / "chains" / "baxter_like_16.json";
}

}  // namespace spdh
