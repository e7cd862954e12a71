#include <cmath>
#include <random>

#include "doctest.h"
#include "spdh/synth.hpp"
#include "spdh/geometry.hpp"
#include "testutil.hpp"

using namespace spdh;

namespace {

PinholeIntrinsics cam64() {
  return {80.0, 80.0, 32.0, 32.0, 64, 64};
}

double point_segment_distance(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                              const Eigen::Vector3d& b) {
  const Eigen::Vector3d ab = b - a;
  const double t = std::clamp(ab.dot(p - a) / ab.dot(ab), 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

}  // namespace

TEST_CASE("render: empty scene is all zero") {
  const DepthImage depth = render_prims({}, cam64(), {0.0, 0.0}, 0);
  for (float d : depth.data) CHECK(d == 0.0f);
}

TEST_CASE("render: on-axis sphere front surface depth") {
  PrimScene prims;
  prims.spheres.push_back({{0.0, 0.0, 1000.0}, 120.0});
  const DepthImage depth = render_prims(prims, cam64(), {0.0, 0.0}, 0);
  CHECK(depth.at(32, 32) == doctest::Approx(880.0).epsilon(1e-9));  // 1000 - r
}

TEST_CASE("render: fronto-parallel plane gives a constant Z-depth image") {
  PrimScene prims;
  prims.plane = PlanePrim{{0.0, 0.0, 800.0}, {0.0, 0.0, 1.0}};
  const DepthImage depth = render_prims(prims, cam64(), {0.0, 0.0}, 0);
  for (float d : depth.data) CHECK(d == doctest::Approx(800.0).epsilon(1e-12));
}

TEST_CASE("render: hit points lie on analytic capsule surfaces within 0.5 mm") {
  const PinholeIntrinsics K = cam64();
  PrimScene prims;
  prims.capsules.push_back({{-250.0, -60.0, 900.0}, {220.0, 80.0, 1200.0}, 70.0});
  prims.capsules.push_back({{-100.0, 150.0, 1400.0}, {150.0, -170.0, 1050.0}, 45.0});
  const DepthImage depth = render_prims(prims, K, {0.0, 0.0}, 0);
  const XyzImage xyz = backproject(depth, K);
  int hits = 0;
  for (int v = 0; v < 64; ++v)
    for (int u = 0; u < 64; ++u) {
      if (!xyz.is_valid(u, v)) continue;
      ++hits;
      const Eigen::Vector3d p = xyz.at(u, v).cast<double>();
      double best = 1e30;
      for (const auto& c : prims.capsules)
        best = std::min(best, std::abs(point_segment_distance(p, c.a, c.b) - c.radius));
      CHECK(best <= 0.5);
    }
  CHECK(hits > 200);  // the capsules actually cover a good part of the frame
}

TEST_CASE("render: box and plane compose with capsules by nearest hit") {
  PrimScene prims;
  prims.plane = PlanePrim{{0.0, 0.0, 2000.0}, {0.0, 0.0, 1.0}};
  BoxPrim box;
  box.pose.translation = {0.0, 0.0, 1500.0};
  box.half_extents = {200.0, 200.0, 100.0};
  prims.box = box;
  const DepthImage depth = render_prims(prims, cam64(), {0.0, 0.0}, 0);
  CHECK(depth.at(32, 32) == doctest::Approx(1400.0));  // box front face
  CHECK(depth.at(0, 0) == doctest::Approx(2000.0));    // plane in the corner
}

TEST_CASE("render: noise is deterministic per seed and respects dropout") {
  PrimScene prims;
  prims.plane = PlanePrim{{0.0, 0.0, 1000.0}, {0.0, 0.0, 1.0}};
  NoiseModel noise{5.0, 0.2};
  const DepthImage a = render_prims(prims, cam64(), noise, 123);
  const DepthImage b = render_prims(prims, cam64(), noise, 123);
  const DepthImage c = render_prims(prims, cam64(), noise, 124);
  CHECK(a.data == b.data);
  CHECK(a.data != c.data);
  int dropped = 0;
  for (float d : a.data) dropped += (d == 0.0f);
  CHECK(dropped > 400);  // ~20% of 4096
  CHECK(dropped < 1300);
}

TEST_CASE("script_angles: linear interpolation across segments") {
  SequenceSpec seq;
  seq.num_frames = 5;
  seq.script = {{{0.0}, {1.0}}, {{1.0}, {-1.0}}};
  CHECK(script_angles(seq, 1, 0)[0] == doctest::Approx(0.0));
  CHECK(script_angles(seq, 1, 1)[0] == doctest::Approx(0.5));
  CHECK(script_angles(seq, 1, 2)[0] == doctest::Approx(1.0));
  CHECK(script_angles(seq, 1, 4)[0] == doctest::Approx(-1.0));
  SequenceSpec empty;
  empty.num_frames = 3;
  CHECK(script_angles(empty, 4, 2) == JointAngles(4, 0.0));
}

TEST_CASE("generate_sequence: single identity frame produces one png + one record") {
  testutil::TempDir tmp("seq1");
  SceneSpec scene;
  scene.chain = load_chain(bundled_chain_path(testutil::data_dir()));
  scene.camera = load_camera_json(testutil::data_dir() / "cameras" / "desk_tof_512x424.json");
  scene.noise = {0.0, 0.0};
  SequenceSpec seq;
  seq.num_frames = 1;
  seq.jitter_diameter_mm = 0.0;
  generate_sequence(scene, seq, tmp.path() / "s");
  CHECK(std::filesystem::exists(tmp.path() / "s" / "depth_000000.png"));
  CHECK(!std::filesystem::exists(tmp.path() / "s" / "depth_000001.png"));
  std::ifstream ann(tmp.path() / "s" / "annotations.jsonl");
  std::string line;
  int lines = 0;
  while (std::getline(ann, line))
    if (!line.empty()) ++lines;
  CHECK(lines == 1);
}

TEST_CASE("generate_sequence: same seed gives byte-identical trees") {
  testutil::TempDir tmp("det");
  SceneSpec scene;
  scene.chain = load_chain(bundled_chain_path(testutil::data_dir()));
  scene.camera = load_camera_json(testutil::data_dir() / "cameras" / "desk_tof_512x424.json");
  scene.noise = {3.0, 0.01};
  scene.ground_plane_y_mm = -800.0;
  SequenceSpec seq;
  seq.num_frames = 3;
  seq.seed = 99;
  Rng rng_a(99, 1);
  seq.script = scripted_pick_n_place(scene.chain, 2, rng_a);
  generate_sequence(scene, seq, tmp.path() / "a");
  generate_sequence(scene, seq, tmp.path() / "b");
  std::string why;
  CHECK_MESSAGE(testutil::trees_equal(tmp.path() / "a", tmp.path() / "b", &why), why);
}

TEST_CASE("generate_sequence: camera stays inside the jitter sphere") {
  SceneSpec scene;
  scene.chain = load_chain(bundled_chain_path(testutil::data_dir()));
  scene.camera = load_camera_json(testutil::data_dir() / "cameras" / "desk_tof_512x424.json");
  scene.noise = {0.0, 0.0};
  const Eigen::Vector3d anchor = scene.chain.base.inverse().translation;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    testutil::TempDir tmp("jit");
    SequenceSpec seq;
    seq.num_frames = 1;
    seq.seed = seed;
    seq.jitter_diameter_mm = 1000.0;
    const SequenceResult res = generate_sequence(scene, seq, tmp.path() / "s");
    CHECK((res.camera_pose.translation - anchor).norm() <= 500.0 + 1e-9);
  }
}

TEST_CASE("ground truth joints are consistent with the rendered geometry") {
  SceneSpec scene;
  scene.chain = load_chain(bundled_chain_path(testutil::data_dir()));
  scene.camera = load_camera_json(testutil::data_dir() / "cameras" / "desk_tof_512x424.json");
  scene.noise = {0.0, 0.0};
  const JointAngles q(16, 0.1);
  const DepthImage depth = render_depth(scene, q);
  const JointSet3D joints = forward_kinematics(scene.chain, q);
  std::vector<double> radii;
  for (const auto& j : scene.chain.joints) radii.push_back(j.radius_mm);
  const auto vis = joint_visibility(joints, radii, depth, scene.camera, 0.0);
  int visible = 0;
  for (size_t j = 0; j < joints.size(); ++j) {
    if (!vis[j]) continue;
    ++visible;
    const Eigen::Vector2d uv = project(joints.positions_mm[j], scene.camera);
    const float d = depth.at(static_cast<int>(std::lround(uv.x())),
                             static_cast<int>(std::lround(uv.y())));
    CHECK(d <= joints.positions_mm[j].z() + 1.0);                 // surface not behind center
    CHECK(d >= joints.positions_mm[j].z() - radii[j] - 1.0);      // within one link radius
  }
  CHECK(visible >= 8);  // overlapping thicker links legitimately occlude a few
  CHECK(visible < 16);
}

TEST_CASE("occlusion flag: joint behind a closer surface is invisible") {
  const PinholeIntrinsics K = cam64();
  PrimScene prims;
  prims.spheres.push_back({{0.0, 0.0, 800.0}, 100.0});  // occluder
  const DepthImage depth = render_prims(prims, K, {0.0, 0.0}, 0);
  JointSet3D joints;
  joints.names = {"hidden", "front"};
  joints.positions_mm = {{0.0, 0.0, 1500.0}, {0.0, 0.0, 735.0}};
  joints.visible = {1, 1};
  const auto vis = joint_visibility(joints, {40.0, 40.0}, depth, K, 0.0);
  CHECK(!vis[0]);  // surface at 700 is far in front of 1500
  CHECK(vis[1]);   // 700 >= 735 - 40: the surface is the joint's own link
}

TEST_CASE("scripted_pick_n_place alternates arm groups inside scaled limits") {
  const RobotChain chain = load_chain(bundled_chain_path(testutil::data_dir()));
  Rng rng(5, 0);
  const auto script = scripted_pick_n_place(chain, 10, rng);
  CHECK(script.size() == 20);  // pick + place per motion
  for (const auto& seg : script) {
    REQUIRE(seg.start.size() == 16);
    REQUIRE(seg.end.size() == 16);
    for (size_t i = 0; i < 16; ++i) {
      const auto& j = chain.joints[i];
      const double mid = 0.5 * (j.limit_lo + j.limit_hi);
      const double half = 0.5 * (j.limit_hi - j.limit_lo) * 0.6;
      CHECK(seg.end[i] >= mid - half - 1e-12);
      CHECK(seg.end[i] <= mid + half + 1e-12);
    }
  }
  // segment 0 moves only left-arm joints away from zero (arm 0 = left)
  bool right_moved = false;
  for (size_t i = 0; i < 16; ++i)
    if (chain.joints[i].name.rfind("r_", 0) == 0 && script[0].end[i] != 0.0) right_moved = true;
  CHECK(!right_moved);
}
