#include "spdh/robot_model.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

namespace spdh {

void RobotChain::validate() const {
  SPDH_REQUIRE(!joints.empty(), "chain: no joints");
  SPDH_REQUIRE(joints[0].parent == -1, "chain: joint 0 must be the base (parent = -1)");
  for (size_t i = 0; i < joints.size(); ++i) {
    const ChainJoint& j = joints[i];
    if (i > 0)
      SPDH_REQUIRE(j.parent >= 0 && j.parent < static_cast<int>(i),
                   "chain: joint ", i, " (", j.name,
                   ") breaks topological order: parent index ", j.parent);
    SPDH_REQUIRE(std::abs(j.axis.norm() - 1.0) <= 1e-9,
                 "chain: joint ", i, " (", j.name, ") axis is not unit-norm");
    SPDH_REQUIRE(j.radius_mm > 0.0, "chain: joint ", i, " (", j.name, ") radius must be positive");
    SPDH_REQUIRE(j.limit_lo <= j.limit_hi, "chain: joint ", i, " (", j.name, ") bad limits");
  }
  SPDH_REQUIRE(base.is_rigid(1e-9), "chain: base pose is not a rigid transform");
}

std::vector<RigidTransform> fk_transforms(const RobotChain& chain, const JointAngles& q) {
  chain.validate();
  SPDH_REQUIRE(q.size() == chain.size(), "fk: got ", q.size(), " angles for ", chain.size(),
               " revolute joints");
  for (size_t i = 0; i < q.size(); ++i) {
    SPDH_REQUIRE(std::isfinite(q[i]), "fk: angle ", i, " is not finite");
    SPDH_REQUIRE(q[i] >= chain.joints[i].limit_lo && q[i] <= chain.joints[i].limit_hi,
                 "fk: angle ", i, " (", chain.joints[i].name, ") = ", q[i],
                 " outside limits [", chain.joints[i].limit_lo, ", ", chain.joints[i].limit_hi,
                 "]");
  }
  std::vector<RigidTransform> out(chain.size());
  for (size_t i = 0; i < chain.size(); ++i) {
    const ChainJoint& j = chain.joints[i];
    const RigidTransform& parent = (j.parent < 0) ? chain.base : out[j.parent];
    RigidTransform t;
    t.rotation = rotation_about_axis(j.axis, q[i]);
    t.translation = j.xyz_mm;
    out[i] = parent.compose(t);
  }
  return out;
}

JointSet3D forward_kinematics(const RobotChain& chain, const JointAngles& q) {
  const auto transforms = fk_transforms(chain, q);
  JointSet3D js;
  js.names.reserve(chain.size());
  js.positions_mm.reserve(chain.size());
  for (size_t i = 0; i < chain.size(); ++i) {
    js.names.push_back(chain.joints[i].name);
    js.positions_mm.push_back(transforms[i].translation);
  }
  js.visible.assign(chain.size(), 1);
  return js;
}

namespace {

Eigen::Vector3d vec3_from_json(const nlohmann::json& a) {
  SPDH_REQUIRE(a.is_array() && a.size() == 3, "chain: expected 3-element array");
  return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

}  // namespace

RobotChain load_chain(const std::filesystem::path& path) {
  std::ifstream in(path);
  SPDH_REQUIRE(in.good(), "cannot open chain file: ", path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw Error("chain JSON parse error in " + path.string() + ": " + e.what());
  }
  RobotChain chain;
  try {
    for (const auto& joint : j.at("joints")) {
      ChainJoint c;
      c.name = joint.at("name").get<std::string>();
      c.parent = joint.at("parent").get<int>();
      c.xyz_mm = vec3_from_json(joint.at("xyz_mm"));
      c.axis = vec3_from_json(joint.at("axis"));
      c.radius_mm = joint.at("radius_mm").get<double>();
      if (joint.contains("limits_rad")) {
        const auto& lim = joint.at("limits_rad");
        c.limit_lo = lim[0].get<double>();
        c.limit_hi = lim[1].get<double>();
      }
      if (joint.contains("type")) {
        const auto type = joint.at("type").get<std::string>();
        SPDH_REQUIRE(type == "revolute", "chain: joint ", c.name, " has unsupported type '",
                     type, "' (only revolute joints are supported)");
      }
      chain.joints.push_back(std::move(c));
    }
    if (j.contains("base")) {
      const auto& b = j.at("base");
      const Eigen::Vector3d rpy = vec3_from_json(b.at("rotation_rpy_rad"));
      chain.base.rotation = rotation_rpy(rpy.x(), rpy.y(), rpy.z());
      chain.base.translation = vec3_from_json(b.at("translation_mm"));
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error("chain JSON schema error in " + path.string() + ": " + e.what());
  }
  chain.validate();
  return chain;
}

void save_chain(const std::filesystem::path& path, const RobotChain& chain) {
  chain.validate();
  nlohmann::json j;
  j["joints"] = nlohmann::json::array();
  for (const auto& c : chain.joints) {
    j["joints"].push_back({{"name", c.name},
                           {"parent", c.parent},
                           {"xyz_mm", {c.xyz_mm.x(), c.xyz_mm.y(), c.xyz_mm.z()}},
                           {"axis", {c.axis.x(), c.axis.y(), c.axis.z()}},
                           {"radius_mm", c.radius_mm},
                           {"limits_rad", {c.limit_lo, c.limit_hi}}});
  }
  // store rotation as rpy; recover angles from R = Rz(y)Ry(p)Rx(r)
  const Eigen::Matrix3d& r = chain.base.rotation;
  const double pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  double roll, yaw;
  if (std::abs(r(2, 0)) < 1.0 - 1e-12) {
    roll = std::atan2(r(2, 1), r(2, 2));
    yaw = std::atan2(r(1, 0), r(0, 0));
  } else {  // gimbal lock
    roll = std::atan2(-r(1, 2), r(1, 1));
    yaw = 0.0;
  }
  j["base"] = {{"rotation_rpy_rad", {roll, pitch, yaw}},
               {"translation_mm",
                {chain.base.translation.x(), chain.base.translation.y(),
                 chain.base.translation.z()}}};
  std::ofstream out(path);
  SPDH_REQUIRE(out.good(), "cannot write chain file: ", path.string());
  out << j.dump(2) << "\n";
}

}  // namespace spdh
