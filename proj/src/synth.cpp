#include "spdh/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"
#include "spdh/image_io.hpp"
#include "spdh/log.hpp"

namespace spdh {

namespace {
constexpr double kRayEps = 1e-6;
constexpr double kInf = std::numeric_limits<double>::infinity();

double ray_sphere(const Eigen::Vector3d& d, const Eigen::Vector3d& c, double r) {
  // origin at 0: |t d - c|^2 = r^2
  const double a = d.dot(d);
  const double b = -2.0 * d.dot(c);
  const double cc = c.dot(c) - r * r;
  const double disc = b * b - 4.0 * a * cc;
  if (disc < 0.0) return kInf;
  const double sq = std::sqrt(disc);
  const double t0 = (-b - sq) / (2.0 * a);
  if (t0 > kRayEps) return t0;
  const double t1 = (-b + sq) / (2.0 * a);
  return t1 > kRayEps ? t1 : kInf;  // origin inside the sphere
}

double ray_capsule(const Eigen::Vector3d& d, const Capsule& cap) {
  const Eigen::Vector3d ab = cap.b - cap.a;
  const Eigen::Vector3d ao = -cap.a;
  const double abab = ab.dot(ab);
  if (abab < 1e-12) return ray_sphere(d, cap.a, cap.radius);
  const double m = ab.dot(d) / abab;
  const double n = ab.dot(ao) / abab;
  const Eigen::Vector3d q = d - ab * m;
  const Eigen::Vector3d r = ao - ab * n;
  const double a = q.dot(q);
  const double b = 2.0 * q.dot(r);
  const double c = r.dot(r) - cap.radius * cap.radius;
  if (a < 1e-14) {
    // ray parallel to the axis: caps only
    return std::min(ray_sphere(d, cap.a, cap.radius), ray_sphere(d, cap.b, cap.radius));
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return kInf;
  const double t = (-b - std::sqrt(disc)) / (2.0 * a);
  const double k = t * m + n;  // axial coordinate of the cylinder hit
  if (k < 0.0) return ray_sphere(d, cap.a, cap.radius);
  if (k > 1.0) return ray_sphere(d, cap.b, cap.radius);
  return t > kRayEps ? t : kInf;
}

double ray_plane(const Eigen::Vector3d& d, const PlanePrim& plane) {
  const double denom = d.dot(plane.normal);
  if (std::abs(denom) < 1e-12) return kInf;
  const double t = plane.point.dot(plane.normal) / denom;
  return t > kRayEps ? t : kInf;
}

double ray_box(const Eigen::Vector3d& d, const BoxPrim& box) {
  // slab test in the box frame
  const RigidTransform inv = box.pose.inverse();
  const Eigen::Vector3d o = inv.translation;  // camera origin in box frame
  const Eigen::Vector3d dir = inv.rotation * d;
  double tnear = -kInf, tfar = kInf;
  for (int i = 0; i < 3; ++i) {
    const double he = box.half_extents[i];
    if (std::abs(dir[i]) < 1e-12) {
      if (o[i] < -he || o[i] > he) return kInf;
      continue;
    }
    double t0 = (-he - o[i]) / dir[i];
    double t1 = (he - o[i]) / dir[i];
    if (t0 > t1) std::swap(t0, t1);
    tnear = std::max(tnear, t0);
    tfar = std::min(tfar, t1);
    if (tnear > tfar) return kInf;
  }
  if (tnear > kRayEps) return tnear;
  return tfar > kRayEps ? tfar : kInf;
}

}  // namespace

namespace detail {

double trace_ray(const PrimScene& prims, double dx, double dy) {
  const Eigen::Vector3d d(dx, dy, 1.0);
  double best = kInf;
  for (const auto& cap : prims.capsules) best = std::min(best, ray_capsule(d, cap));
  for (const auto& s : prims.spheres) best = std::min(best, ray_sphere(d, s.center, s.radius));
  if (prims.plane) best = std::min(best, ray_plane(d, *prims.plane));
  if (prims.box) best = std::min(best, ray_box(d, *prims.box));
  return best;
}

float apply_noise(double t, const NoiseModel& noise, float max_range, std::uint64_t seed,
                  std::uint64_t pixel_index) {
  double d = t;
  if (noise.sigma_mm > 0.0 || noise.dropout > 0.0) {
    Rng rng(seed, pixel_index);
    if (noise.sigma_mm > 0.0) d += noise.sigma_mm * rng.gaussian();
    if (noise.dropout > 0.0 && rng.uniform01() < noise.dropout) return 0.0f;
  }
  if (d <= 0.0 || d > max_range) return 0.0f;
  return static_cast<float>(d);
}

}  // namespace detail

void NoiseModel::validate() const {
  SPDH_REQUIRE(sigma_mm >= 0.0, "noise: sigma must be >= 0");
  SPDH_REQUIRE(dropout >= 0.0 && dropout <= 1.0, "noise: dropout must be in [0,1]");
}

void SceneSpec::validate() const {
  chain.validate();
  camera.validate();
  noise.validate();
}

void SequenceSpec::validate() const {
  SPDH_REQUIRE(num_frames >= 1, "sequence: num_frames must be >= 1");
  SPDH_REQUIRE(jitter_diameter_mm >= 0.0, "sequence: jitter diameter must be >= 0");
}

JointAngles script_angles(const SequenceSpec& seq, size_t num_joints, int frame) {
  if (seq.script.empty()) return JointAngles(num_joints, 0.0);
  const double t =
      seq.num_frames <= 1 ? 0.0 : static_cast<double>(frame) / (seq.num_frames - 1);
  const size_t nseg = seq.script.size();
  size_t idx = static_cast<size_t>(t * nseg);
  if (idx >= nseg) idx = nseg - 1;
  const double s = t * nseg - idx;
  const MotionSegment& seg = seq.script[idx];
  SPDH_REQUIRE(seg.start.size() == num_joints && seg.end.size() == num_joints,
               "sequence: script segment angle count mismatch");
  JointAngles q(num_joints);
  for (size_t i = 0; i < num_joints; ++i) q[i] = seg.start[i] + s * (seg.end[i] - seg.start[i]);
  return q;
}

PrimScene build_prims(const SceneSpec& scene, const JointAngles& q) {
  const auto transforms = fk_transforms(scene.chain, q);
  PrimScene prims;
  const RigidTransform& cam_from_base = scene.chain.base;
  for (size_t i = 0; i < scene.chain.size(); ++i) {
    const ChainJoint& j = scene.chain.joints[i];
    const Eigen::Vector3d pos = transforms[i].translation;
    if (j.parent < 0) {
      prims.spheres.push_back({pos, j.radius_mm});
      continue;
    }
    const Eigen::Vector3d parent_pos = transforms[j.parent].translation;
    if ((pos - parent_pos).norm() < 1e-9) {
      prims.spheres.push_back({pos, j.radius_mm});
    } else {
      prims.capsules.push_back({parent_pos, pos, j.radius_mm});
    }
  }
  if (scene.ground_plane_y_mm) {
    prims.plane = PlanePrim{cam_from_base.apply({0.0, *scene.ground_plane_y_mm, 0.0}),
                            cam_from_base.rotation * Eigen::Vector3d::UnitY()};
  }
  if (scene.table) {
    BoxPrim box;
    box.pose.rotation = cam_from_base.rotation;
    box.pose.translation = cam_from_base.apply(scene.table->center);
    box.half_extents = scene.table->half_extents;
    prims.box = box;
  }
  return prims;
}

DepthImage render_prims(const PrimScene& prims, const PinholeIntrinsics& K,
                        const NoiseModel& noise, std::uint64_t seed) {
  K.validate();
  noise.validate();
  DepthImage depth(K.width, K.height);
#pragma omp parallel for schedule(dynamic, 8)
  for (int v = 0; v < K.height; ++v) {
    const double dy = (v - K.cy) / K.fy;
    for (int u = 0; u < K.width; ++u) {
      const double dx = (u - K.cx) / K.fx;
      const double t = detail::trace_ray(prims, dx, dy);
      if (!std::isfinite(t)) continue;
      const size_t idx = static_cast<size_t>(v) * K.width + u;
      depth.data[idx] = detail::apply_noise(t, noise, depth.max_range, seed, idx);
    }
  }
  return depth;
}

DepthImage render_depth(const SceneSpec& scene, const JointAngles& q, std::uint64_t seed) {
  scene.validate();
  return render_prims(build_prims(scene, q), scene.camera, scene.noise, seed);
}

std::vector<std::uint8_t> joint_visibility(const JointSet3D& joints,
                                           const std::vector<double>& radii_mm,
                                           const DepthImage& depth, const PinholeIntrinsics& K,
                                           double noise_sigma_mm) {
  SPDH_REQUIRE(radii_mm.size() == joints.size(), "visibility: radius count mismatch");
  std::vector<std::uint8_t> vis(joints.size(), 0);
  for (size_t j = 0; j < joints.size(); ++j) {
    const Eigen::Vector3d& p = joints.positions_mm[j];
    if (!(p.z() > 0.0)) continue;
    const long u = std::lround(K.fx * p.x() / p.z() + K.cx);
    const long v = std::lround(K.fy * p.y() / p.z() + K.cy);
    if (u < 0 || u >= depth.width || v < 0 || v >= depth.height) continue;
    const float d = depth.at(static_cast<int>(u), static_cast<int>(v));
    if (d <= 0.0f) continue;
    const double margin = radii_mm[j] + 3.0 * noise_sigma_mm;
    vis[j] = (d < p.z() - margin) ? 0 : 1;  // occluded by closer surface
  }
  return vis;
}

std::vector<MotionSegment> scripted_pick_n_place(const RobotChain& chain, int num_motions,
                                                 Rng& rng) {
  SPDH_REQUIRE(num_motions >= 1, "script: num_motions must be >= 1");
  const size_t n = chain.size();
  std::vector<int> group(n, 2);  // 0 = left, 1 = right, 2 = shared
  bool has_arms = false;
  for (size_t i = 0; i < n; ++i) {
    if (chain.joints[i].name.rfind("l_", 0) == 0) { group[i] = 0; has_arms = true; }
    if (chain.joints[i].name.rfind("r_", 0) == 0) { group[i] = 1; has_arms = true; }
  }
  auto draw_target = [&](const JointAngles& from, int arm) {
    JointAngles q = from;
    for (size_t i = 0; i < n; ++i) {
      if (has_arms && group[i] != arm) continue;
      const ChainJoint& j = chain.joints[i];
      const double mid = 0.5 * (j.limit_lo + j.limit_hi);
      const double half = 0.5 * (j.limit_hi - j.limit_lo) * 0.6;
      q[i] = rng.uniform(mid - half, mid + half);
    }
    return q;
  };
  std::vector<MotionSegment> script;
  JointAngles cur(n, 0.0);
  for (int m = 0; m < num_motions; ++m) {
    const int arm = m % 2;  // equally split between the two arms
    JointAngles pick = draw_target(cur, arm);
    JointAngles place = draw_target(pick, arm);
    script.push_back({cur, pick});
    script.push_back({pick, place});
    cur = place;
  }
  return script;
}

namespace {

void rpy_from_rotation(const Eigen::Matrix3d& r, double* roll, double* pitch, double* yaw) {
  *pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  if (std::abs(r(2, 0)) < 1.0 - 1e-12) {
    *roll = std::atan2(r(2, 1), r(2, 2));
    *yaw = std::atan2(r(1, 0), r(0, 0));
  } else {
    *roll = std::atan2(-r(1, 2), r(1, 1));
    *yaw = 0.0;
  }
}

nlohmann::json pose_json(const RigidTransform& t) {
  double roll, pitch, yaw;
  rpy_from_rotation(t.rotation, &roll, &pitch, &yaw);
  return {{"rotation_rpy_rad", {roll, pitch, yaw}},
          {"translation_mm", {t.translation.x(), t.translation.y(), t.translation.z()}}};
}

}  // namespace

SequenceResult generate_sequence(const SceneSpec& scene, const SequenceSpec& seq,
                                 const std::filesystem::path& out_dir) {
  scene.validate();
  seq.validate();
  std::filesystem::create_directories(out_dir);

  // Jitter the camera inside the sphere around its anchor, re-aimed at the
  // robot's home-pose centroid so it stays framed.
  SceneSpec jittered = scene;
  RigidTransform world_from_cam = scene.chain.base.inverse();
  if (seq.jitter_diameter_mm > 0.0) {
    RobotChain base_frame_chain = scene.chain;
    base_frame_chain.base = RigidTransform::identity();
    const JointSet3D home = forward_kinematics(base_frame_chain,
                                               JointAngles(scene.chain.size(), 0.0));
    Eigen::Vector3d target = Eigen::Vector3d::Zero();
    for (const auto& p : home.positions_mm) target += p;
    target /= static_cast<double>(home.size());

    Rng jitter_rng(seq.seed, 0xCA11);
    const Eigen::Vector3d eye =
        world_from_cam.translation + jitter_rng.in_ball(0.5 * seq.jitter_diameter_mm);
    world_from_cam = look_at(eye, target, Eigen::Vector3d::UnitY());
    jittered.chain.base = world_from_cam.inverse();
  }

  save_camera_json(out_dir / "camera.json", scene.camera);

  const size_t n = scene.chain.size();
  std::vector<double> radii(n);
  for (size_t i = 0; i < n; ++i) radii[i] = scene.chain.joints[i].radius_mm;

  std::ofstream ann(out_dir / "annotations.jsonl");
  SPDH_REQUIRE(ann.good(), "cannot write annotations in ", out_dir.string());

  for (int f = 0; f < seq.num_frames; ++f) {
    const JointAngles q = script_angles(seq, n, f);
    const std::uint64_t frame_seed = splitmix64(seq.seed ^ (0x9e3779b97f4a7c15ULL * (f + 1)));
    const DepthImage depth = render_depth(jittered, q, frame_seed);
    const JointSet3D joints = forward_kinematics(jittered.chain, q);
    const auto vis =
        joint_visibility(joints, radii, depth, scene.camera, scene.noise.sigma_mm);

    char name[32];
    std::snprintf(name, sizeof(name), "depth_%06d.png", f);
    save_depth(out_dir / name, depth);

    nlohmann::json rec;
    rec["frame_id"] = f;
    rec["joints"] = nlohmann::json::array();
    for (size_t j = 0; j < n; ++j) {
      const auto& p = joints.positions_mm[j];
      rec["joints"].push_back({{"name", joints.names[j]},
                               {"xyz_mm", {p.x(), p.y(), p.z()}},
                               {"visible", vis[j] != 0}});
    }
    rec["camera"] = {{"intrinsics",
                      {{"fx", scene.camera.fx}, {"fy", scene.camera.fy},
                       {"cx", scene.camera.cx}, {"cy", scene.camera.cy},
                       {"width", scene.camera.width}, {"height", scene.camera.height}}},
                     {"pose", pose_json(world_from_cam)}};
    rec["seed"] = seq.seed;
    ann << rec.dump() << "\n";
  }
  SPDH_REQUIRE(ann.good(), "annotation write failed in ", out_dir.string());
  return {seq.num_frames, world_from_cam};
}

}  // namespace spdh
