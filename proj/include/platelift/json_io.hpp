#pragma once

#include "platelift/geometry.hpp"

#include <json.hpp>

#include <string>

namespace platelift {

nlohmann::json vec_to_json(const Vec3& v);
nlohmann::json vec_to_json(const Vec2& v);
nlohmann::json vec_to_json(const Vec6& v);
Vec3 vec3_from_json(const nlohmann::json& j);
Vec2 vec2_from_json(const nlohmann::json& j);

/// {"position": [x,y,z], "quaternion": [w,x,y,z]}
nlohmann::json pose_to_json(const Pose& pose);
/// Accepts {"position", "quaternion"} or {"position", "rpy_deg"}.
Pose pose_from_json(const nlohmann::json& j);

/// Reads and parses a JSON file; throws std::runtime_error with the path.
nlohmann::json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace platelift
