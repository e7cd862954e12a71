#pragma once

#include <cmath>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "spdh/error.hpp"

namespace spdh {

// Rigid transform (rotation + translation, millimeters).
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static RigidTransform identity() { return {}; }

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }

  RigidTransform compose(const RigidTransform& rhs) const {
    return {rotation * rhs.rotation, rotation * rhs.translation + translation};
  }

  RigidTransform inverse() const {
    Eigen::Matrix3d rt = rotation.transpose();
    return {rt, -(rt * translation)};
  }

  bool is_rigid(double tol = 1e-9) const {
    const Eigen::Matrix3d err = rotation * rotation.transpose() - Eigen::Matrix3d::Identity();
    return err.cwiseAbs().maxCoeff() <= tol && rotation.determinant() > 0.0;
  }
};

inline Eigen::Matrix3d rotation_about_axis(const Eigen::Vector3d& axis, double angle_rad) {
  return Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix();
}

// roll about X, pitch about Y, yaw about Z; applied R = Rz * Ry * Rx
inline Eigen::Matrix3d rotation_rpy(double roll, double pitch, double yaw) {
  return (Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

// Looking from `eye` toward `target`: +Z forward, +X right, +Y down
// (pinhole convention). `up_hint` is the world direction that should map to
// image-up (-Y).
inline RigidTransform look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                              const Eigen::Vector3d& up_hint) {
  Eigen::Vector3d fwd = target - eye;
  SPDH_REQUIRE(fwd.norm() > 1e-9, "look_at: eye and target coincide");
  fwd.normalize();
  Eigen::Vector3d right = fwd.cross(up_hint);
  if (right.norm() < 1e-9) right = fwd.cross(Eigen::Vector3d::UnitX());
  right.normalize();
  const Eigen::Vector3d down = fwd.cross(right).normalized();
  RigidTransform t;  // world <- camera
  t.rotation.col(0) = right;
  t.rotation.col(1) = down;
  t.rotation.col(2) = fwd;
  t.translation = eye;
  return t;
}

}  // namespace spdh
