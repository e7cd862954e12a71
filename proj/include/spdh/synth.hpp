#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "spdh/geometry.hpp"
#include "spdh/robot_model.hpp"
#include "spdh/rng.hpp"

namespace spdh {

// Camera-frame analytic primitives. Rays leave the origin through pixel
// centers with direction ((u-cx)/fx, (v-cy)/fy, 1), so the ray parameter t
// is the Z-depth directly.
struct Capsule {
  Eigen::Vector3d a, b;
  double radius;
};
struct Sphere {
  Eigen::Vector3d center;
  double radius;
};
struct PlanePrim {
  Eigen::Vector3d point, normal;
};
struct BoxPrim {
  RigidTransform pose;  // camera <- box
  Eigen::Vector3d half_extents;
};

struct PrimScene {
  std::vector<Capsule> capsules;
  std::vector<Sphere> spheres;
  std::optional<PlanePrim> plane;
  std::optional<BoxPrim> box;
};

struct NoiseModel {
  double sigma_mm = 3.0;  // additive Gaussian on Z
  double dropout = 0.01;  // probability a returned pixel is zeroed
  void validate() const;
};

/// Base-frame axis-aligned box (the table), Y-up base frame.
struct AxisBox {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d half_extents = Eigen::Vector3d::Zero();
};

/// Scene = robot chain (chain.base is camera<-base) + camera + optional
/// ground plane / table in the base frame + sensor noise model.
struct SceneSpec {
  RobotChain chain;
  PinholeIntrinsics camera;
  std::optional<double> ground_plane_y_mm;  // base-frame height, +Y up
  std::optional<AxisBox> table;
  NoiseModel noise;
  void validate() const;
};

struct MotionSegment {
  JointAngles start, end;  // linear joint-space interpolation
};

struct SequenceSpec {
  int num_frames = 1;
  std::vector<MotionSegment> script;  // empty: hold all-zero angles
  double jitter_diameter_mm = 1000.0;
  std::uint64_t seed = 0;
  void validate() const;
};

/// Joint angles at frame k of num_frames, segments uniform in time.
JointAngles script_angles(const SequenceSpec& seq, size_t num_joints, int frame);

/// Camera-frame primitives for one robot configuration.
PrimScene build_prims(const SceneSpec& scene, const JointAngles& q);

/// Ray-cast Z-depth of the nearest primitive per pixel; 0 where nothing is
/// hit. Gaussian Z noise then dropout, both counter-seeded per pixel.
DepthImage render_prims(const PrimScene& prims, const PinholeIntrinsics& K,
                        const NoiseModel& noise, std::uint64_t seed);

DepthImage render_depth(const SceneSpec& scene, const JointAngles& q, std::uint64_t seed = 0);

/// Joint visibility against a rendered frame: a joint is occluded when the
/// depth at its pixel is more than (link radius + 3*sigma_noise) in front of
/// the joint center; off-image, behind-camera and no-return joints are
/// invisible too.
std::vector<std::uint8_t> joint_visibility(const JointSet3D& joints,
                                           const std::vector<double>& radii_mm,
                                           const DepthImage& depth, const PinholeIntrinsics& K,
                                           double noise_sigma_mm);

/// Random pick-n-place-like script: num_motions targets alternating between
/// the "l_"/"r_" joint groups (whole body when no such prefixes exist),
/// drawn uniformly inside 0.6x the joint limits.
std::vector<MotionSegment> scripted_pick_n_place(const RobotChain& chain, int num_motions,
                                                 Rng& rng);

/// Output of generate_sequence: per-frame depth PNG + one JSONL annotation
/// line + a camera.json, all inside out_dir. Deterministic under seq.seed.
struct SequenceResult {
  int frames_written = 0;
  RigidTransform camera_pose;  // world (base) <- camera after jitter
};
SequenceResult generate_sequence(const SceneSpec& scene, const SequenceSpec& seq,
                                 const std::filesystem::path& out_dir);

namespace detail {
// Smallest Z-depth hit (>eps) of the pixel ray through (dx, dy, 1);
// +inf when nothing is hit. Shared by OpenMP and serial renderers.
double trace_ray(const PrimScene& prims, double dx, double dy);
// Noise stage: returns the stored depth value for a hit at depth t.
float apply_noise(double t, const NoiseModel& noise, float max_range, std::uint64_t seed,
                  std::uint64_t pixel_index);
}  // namespace detail

}  // namespace spdh
