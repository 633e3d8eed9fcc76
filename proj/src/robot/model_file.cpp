// JSON model file.
//
//   {
//     "model_version": 1,
//     "name": "desk2",
//     "representative": true,
//     "base": {"mass": 100.0, "edge": 0.8726},
//     "arms": {"count": 2, "joints_per_arm": 3, "faces": ["+x", "-x"],
//              "mount_roll": [0, 1.5707963267948966]},
//     "links": [ {"axis": [0,0,1], "origin": [0,0,0], "mass": 3.7,
//                 "com": [0,0,0.0446], "inertia": [ixx, iyy, izz, ixy, ixz, iyz],
//                 "capsule": {"radius": 0.06, "length": 0.089, "direction": [0,0,1]},
//                 "limits": {"q_max": 6.28, "qdot_max": 3.14, "tau_max": 150}} ],
//     "tool_offset": [0, 0.39225, 0]
//   }
//
// "inertia" may also be given as three principal moments.

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "octo/common/errors.hpp"
#include "octo/common/hash.hpp"
#include "octo/robot/robot.hpp"

namespace octo::robot {

namespace {

using nlohmann::json;

constexpr int kSupportedModelVersion = 1;

const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw ConfigurationError("model file: missing key '" + where + key + "'");
  }
  return j.at(key);
}

double number(const json& j, const char* key, const std::string& where) {
  const json& v = require(j, key, where);
  if (!v.is_number()) throw ConfigurationError("model file: '" + where + key + "' must be a number");
  return v.get<double>();
}

Vec3 vec3(const json& j, const char* key, const std::string& where) {
  const json& v = require(j, key, where);
  if (!v.is_array() || v.size() != 3) {
    throw ConfigurationError("model file: '" + where + key + "' must be a 3-vector");
  }
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Mat3 inertia_from(const json& v, const std::string& where) {
  if (!v.is_array() || (v.size() != 3 && v.size() != 6)) {
    throw ConfigurationError("model file: '" + where + "inertia' must have 3 or 6 entries");
  }
  Mat3 m = Mat3::Zero();
  m(0, 0) = v[0].get<double>();
  m(1, 1) = v[1].get<double>();
  m(2, 2) = v[2].get<double>();
  if (v.size() == 6) {
    m(0, 1) = m(1, 0) = v[3].get<double>();
    m(0, 2) = m(2, 0) = v[4].get<double>();
    m(1, 2) = m(2, 1) = v[5].get<double>();
  }
  return m;
}

}  // namespace

RobotConfig config_from_json_text(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigurationError(std::string("model file: ") + e.what());
  }
  RobotConfig c;
  c.model_version = static_cast<int>(number(j, "model_version", ""));
  if (c.model_version != kSupportedModelVersion) {
    throw ConfigurationError("model file: unsupported model_version " + std::to_string(c.model_version));
  }
  c.name = j.value("name", "custom");
  c.representative = j.value("representative", true);
  const json& base = require(j, "base", "");
  c.base_mass = number(base, "mass", "base.");
  c.base_half_extent = number(base, "edge", "base.") / 2.0;
  const json& arms = require(j, "arms", "");
  c.arm_count = static_cast<int>(number(arms, "count", "arms."));
  c.joints_per_arm = static_cast<int>(number(arms, "joints_per_arm", "arms."));
  for (const json& f : require(arms, "faces", "arms.")) c.faces.push_back(parse_face(f.get<std::string>()));
  if (arms.contains("mount_roll")) {
    for (const json& r : arms.at("mount_roll")) {
      if (!r.is_number()) throw ConfigurationError("model file: arms.mount_roll entries must be numbers");
      c.mount_roll.push_back(r.get<double>());
    }
  }
  int index = 0;
  for (const json& l : require(j, "links", "")) {
    const std::string where = "links[" + std::to_string(index++) + "].";
    LinkParams p;
    p.axis = vec3(l, "axis", where);
    p.origin = vec3(l, "origin", where);
    p.mass = number(l, "mass", where);
    p.com = vec3(l, "com", where);
    p.inertia = inertia_from(require(l, "inertia", where), where);
    const json& cap = require(l, "capsule", where);
    p.capsule_radius = number(cap, "radius", where + "capsule.");
    p.capsule_length = number(cap, "length", where + "capsule.");
    p.capsule_direction = vec3(cap, "direction", where + "capsule.");
    const json& lim = require(l, "limits", where);
    p.q_max = number(lim, "q_max", where + "limits.");
    p.qdot_max = number(lim, "qdot_max", where + "limits.");
    p.tau_max = number(lim, "tau_max", where + "limits.");
    c.links.push_back(p);
  }
  c.tool_offset = vec3(j, "tool_offset", "");
  c.validate();
  return c;
}

std::string config_to_json_text(const RobotConfig& c) {
  json j;
  j["model_version"] = c.model_version;
  j["name"] = c.name;
  j["representative"] = c.representative;
  j["base"] = {{"mass", c.base_mass}, {"edge", 2.0 * c.base_half_extent}};
  json faces = json::array();
  for (Face f : c.faces) faces.push_back(std::string(face_name(f)));
  j["arms"] = {{"count", c.arm_count}, {"joints_per_arm", c.joints_per_arm}, {"faces", faces}};
  if (!c.mount_roll.empty()) j["arms"]["mount_roll"] = c.mount_roll;
  json links = json::array();
  for (const LinkParams& p : c.links) {
    links.push_back({{"axis", to_json(p.axis)},
                     {"origin", to_json(p.origin)},
                     {"mass", p.mass},
                     {"com", to_json(p.com)},
                     {"inertia", json::array({p.inertia(0, 0), p.inertia(1, 1), p.inertia(2, 2), p.inertia(0, 1),
                                              p.inertia(0, 2), p.inertia(1, 2)})},
                     {"capsule",
                      {{"radius", p.capsule_radius},
                       {"length", p.capsule_length},
                       {"direction", to_json(p.capsule_direction)}}},
                     {"limits", {{"q_max", p.q_max}, {"qdot_max", p.qdot_max}, {"tau_max", p.tau_max}}}});
  }
  j["links"] = links;
  j["tool_offset"] = to_json(c.tool_offset);
  return j.dump(2) + "\n";
}

RobotConfig load_robot_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open model file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json_text(ss.str());
}

void save_robot_config(const RobotConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigurationError("cannot write model file '" + path + "'");
  out << config_to_json_text(config);
}

std::uint64_t config_hash(const RobotConfig& config) { return fnv1a64(config_to_json_text(config)); }

}  // namespace octo::robot
