#include "platelift/json_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace platelift {

using nlohmann::json;

json vec_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
json vec_to_json(const Vec2& v) { return json::array({v.x(), v.y()}); }
json vec_to_json(const Vec6& v) {
  json j = json::array();
  for (int i = 0; i < 6; ++i) j.push_back(v[i]);
  return j;
}

Vec3 vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected a 3-vector, got " + j.dump());
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Vec2 vec2_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("expected a 2-vector, got " + j.dump());
  return {j[0].get<double>(), j[1].get<double>()};
}

json pose_to_json(const Pose& pose) {
  const auto q = pose.quaternion_wxyz();
  return {{"position", vec_to_json(pose.translation)}, {"quaternion", {q[0], q[1], q[2], q[3]}}};
}

Pose pose_from_json(const json& j) {
  const Vec3 p = j.contains("position") ? vec3_from_json(j.at("position")) : Vec3::Zero();
  if (j.contains("quaternion")) {
    const auto& q = j.at("quaternion");
    if (!q.is_array() || q.size() != 4) throw std::invalid_argument("quaternion must have 4 entries");
    return Pose::from_quaternion(p, {q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>()});
  }
  if (j.contains("rpy_deg")) {
    const Vec3 rpy = vec3_from_json(j.at("rpy_deg"));
    return Pose::from_rpy(p, deg2rad(rpy.x()), deg2rad(rpy.y()), deg2rad(rpy.z()));
  }
  return Pose::from_translation(p);
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

}  // namespace platelift
