#include "platelift/grasp_db.hpp"

#include "platelift/json_io.hpp"

#include <cmath>

namespace platelift {

using nlohmann::json;

std::string to_string(HandKind hand) { return hand == HandKind::Grip ? "grip" : "push"; }

bool operator==(const HandPlacement& a, const HandPlacement& b) {
  return a.id == b.id && a.hand == b.hand && a.contacts == b.contacts && a.pose.rotation == b.pose.rotation &&
         a.pose.translation == b.pose.translation;
}

std::string RConf::label() const {
  if (empty()) return "{}";
  std::string s = "{";
  if (grip) s += grip->id;
  if (grip && push) s += ",";
  if (push) s += push->id;
  return s + "}";
}

void SuctionConfig::validate(const PlateModel& plate, double tolerance) const {
  if (!(pad_radius > 0.0)) throw std::invalid_argument("suction pad radius must be positive");
  if (!(max_force > 0.0)) throw std::invalid_argument("suction maximum vacuum force must be positive");
  if (!(mu >= 0.0) || !(kappa >= 0.0)) throw std::invalid_argument("suction mu and kappa must be non-negative");
  if (std::abs(point.z() - plate.half_height()) > tolerance || std::abs(point.x()) > 0.5 * plate.length + tolerance ||
      std::abs(point.y()) > 0.5 * plate.width + tolerance)
    throw std::invalid_argument("suction attachment point must lie on the plate top face");
}

void to_json(json& j, const SuctionConfig& s) {
  j = {{"point_m", vec_to_json(s.point)}, {"pad_radius_m", s.pad_radius}, {"kappa_n", s.kappa},
       {"mu", s.mu},                      {"max_force_n", s.max_force}};
}

void from_json(const json& j, SuctionConfig& s) {
  s.point = vec3_from_json(j.at("point_m"));
  if (j.contains("pad_radius_m")) s.pad_radius = j.at("pad_radius_m").get<double>();
  if (j.contains("kappa_n")) s.kappa = j.at("kappa_n").get<double>();
  if (j.contains("mu")) s.mu = j.at("mu").get<double>();
  if (j.contains("max_force_n")) s.max_force = j.at("max_force_n").get<double>();
}

namespace {

// Inward normal of the plate face containing `p`, or nullopt when `p` is
// not on the surface.
std::optional<Vec3> face_normal_at(const PlateModel& plate, const Vec3& p, const Vec3& normal, double tol) {
  const Vec3 half(0.5 * plate.length, 0.5 * plate.width, 0.5 * plate.height);
  for (int i = 0; i < 3; ++i) {
    if (std::abs(p[i]) > half[i] + tol) return std::nullopt;
  }
  for (int axis = 0; axis < 3; ++axis)
    for (double sign : {-1.0, 1.0}) {
      if (std::abs(p[axis] - sign * half[axis]) > tol) continue;
      Vec3 inward = Vec3::Zero();
      inward[axis] = -sign;
      // A point on an edge of the box belongs to two faces: pick the one the
      // stated normal refers to.
      if ((inward - normal).norm() <= 1e-6) return inward;
    }
  return std::nullopt;
}

}  // namespace

void validate_placement(const HandPlacement& pl, const PlateModel& plate, const PlacementRules& rules) {
  auto fail = [&](const std::string& why) { throw GraspValidationError("placement '" + pl.id + "': " + why); };
  if (pl.id.empty()) throw GraspValidationError("placement without id");
  if (!pl.pose.is_valid(1e-6)) fail("pose rotation is not orthonormal");
  const std::size_t expected = pl.hand == HandKind::Grip ? 2 : 1;
  if (pl.contacts.size() != expected)
    fail("expected " + std::to_string(expected) + " contact point(s), got " + std::to_string(pl.contacts.size()));
  for (const auto& c : pl.contacts) {
    if (std::abs(c.normal.norm() - 1.0) > 1e-6) fail("contact normal is not a unit vector");
    if (!face_normal_at(plate, c.point, c.normal, rules.tolerance))
      fail("contact point is off the plate surface or its normal is not the inward face normal");
  }
  if (pl.hand == HandKind::Grip) {
    const auto& a = pl.contacts[0];
    const auto& b = pl.contacts[1];
    if ((a.normal + b.normal).norm() > 1e-6) fail("grip contact normals are not antiparallel");
    if ((a.point - b.point).norm() > rules.max_gripper_stroke + rules.tolerance)
      fail("grip width exceeds the gripper stroke");
  }
}

json placement_to_json(const HandPlacement& p) {
  json contacts = json::array();
  for (const auto& c : p.contacts) contacts.push_back({{"point", vec_to_json(c.point)}, {"normal", vec_to_json(c.normal)}});
  return {{"id", p.id}, {"hand", to_string(p.hand)}, {"pose", pose_to_json(p.pose)}, {"contacts", contacts}};
}

HandPlacement placement_from_json(const json& j) {
  HandPlacement p;
  p.id = j.at("id").get<std::string>();
  const auto hand = j.at("hand").get<std::string>();
  if (hand == "grip")
    p.hand = HandKind::Grip;
  else if (hand == "push")
    p.hand = HandKind::Push;
  else
    throw GraspValidationError("placement '" + p.id + "': unknown hand '" + hand + "'");
  p.pose = pose_from_json(j.at("pose"));
  for (const auto& c : j.at("contacts")) p.contacts.push_back({vec3_from_json(c.at("point")), vec3_from_json(c.at("normal"))});
  return p;
}

std::vector<RConf> load_rconf_db(const json& doc, const PlateModel& plate, const PlacementRules& rules) {
  std::vector<HandPlacement> grips, pushes;
  auto read = [&](const char* key, HandKind expected, std::vector<HandPlacement>& out) {
    if (!doc.contains(key)) return;
    for (const auto& entry : doc.at(key)) {
      HandPlacement p;
      try {
        p = placement_from_json(entry);
      } catch (const GraspValidationError&) {
        throw;
      } catch (const std::exception& e) {
        throw GraspValidationError(std::string("malformed ") + key + " entry: " + e.what());
      }
      if (p.hand != expected) throw GraspValidationError("placement '" + p.id + "' listed under the wrong hand");
      validate_placement(p, plate, rules);
      out.push_back(std::move(p));
    }
  };
  read("grips", HandKind::Grip, grips);
  read("pushes", HandKind::Push, pushes);

  std::vector<RConf> db;
  db.push_back({});
  for (const auto& g : grips) db.push_back({g, std::nullopt});
  for (const auto& p : pushes) db.push_back({std::nullopt, p});
  if (doc.value("combinations", true))
    for (const auto& g : grips)
      for (const auto& p : pushes) db.push_back({g, p});
  return db;
}

HandPlacement to_world(const HandPlacement& placement, const Pose& plate_pose) {
  HandPlacement w = placement;
  w.pose = plate_pose * placement.pose;
  for (auto& c : w.contacts) {
    c.point = plate_pose * c.point;
    c.normal = plate_pose.rotate(c.normal);
  }
  return w;
}

std::vector<HandPlacement> to_world(const RConf& rconf, const Pose& plate_pose) {
  std::vector<HandPlacement> out;
  if (rconf.grip) out.push_back(to_world(*rconf.grip, plate_pose));
  if (rconf.push) out.push_back(to_world(*rconf.push, plate_pose));
  return out;
}

bool rconf_subset(const RConf& a, const RConf& b) {
  if (a.grip && !(b.grip && *a.grip == *b.grip)) return false;
  if (a.push && !(b.push && *a.push == *b.push)) return false;
  return true;
}

json generate_grasps(const PlateModel& plate, const GraspGeneratorParams& params) {
  plate.validate();
  if (!(params.spacing > 0.0)) throw std::invalid_argument("grasp spacing must be positive");
  const double hz = plate.half_height();
  struct Side {
    Vec3 outward;
    Vec3 along;
    double half_extent;  // distance from center to the side face
    double side_length;
  };
  const std::vector<Side> sides = {
      {-Vec3::UnitY(), Vec3::UnitX(), 0.5 * plate.width, plate.length},
      {Vec3::UnitX(), Vec3::UnitY(), 0.5 * plate.length, plate.width},
      {Vec3::UnitY(), -Vec3::UnitX(), 0.5 * plate.width, plate.length},
      {-Vec3::UnitX(), -Vec3::UnitY(), 0.5 * plate.length, plate.width},
  };
  auto stations = [&](double side_length, double margin) {
    std::vector<double> out;
    const double usable = side_length - 2.0 * margin;
    if (usable < 0.0) return out;
    const int n = static_cast<int>(std::floor(usable / params.spacing + 1e-9)) + 1;
    for (int k = 0; k < n; ++k) out.push_back((k - 0.5 * (n - 1)) * params.spacing);
    return out;
  };

  json grips = json::array(), pushes = json::array();
  int gid = 0, pid = 0;
  for (const auto& side : sides) {
    for (double t : stations(side.side_length, 0.03)) {
      const Vec3 q = side.outward * (side.half_extent - params.grip_inset) + side.along * t;
      HandPlacement g;
      g.id = "g" + std::to_string(gid++);
      g.hand = HandKind::Grip;
      Mat3 r;
      r.col(2) = -side.outward;  // approach
      r.col(0) = Vec3::UnitZ();  // closing direction
      r.col(1) = r.col(2).cross(r.col(0));
      g.pose.rotation = r;
      g.pose.translation = q;
      g.contacts = {{q + Vec3(0, 0, hz), -Vec3::UnitZ()}, {q - Vec3(0, 0, hz), Vec3::UnitZ()}};
      grips.push_back(placement_to_json(g));
    }
  }
  const double tilt = deg2rad(params.push_tilt_deg);
  for (double face_sign : {1.0, -1.0}) {
    if (face_sign > 0 && !params.top_pushes) continue;
    if (face_sign < 0 && !params.bottom_pushes) continue;
    const Vec3 inward = -face_sign * Vec3::UnitZ();
    for (const auto& side : sides) {
      for (double t : stations(side.side_length - 2.0 * params.push_inset, 0.0)) {
        const Vec3 c = side.outward * (side.half_extent - params.push_inset) + side.along * t + Vec3(0, 0, face_sign * hz);
        HandPlacement p;
        p.id = "p" + std::to_string(pid++);
        p.hand = HandKind::Push;
        Mat3 r;
        r.col(2) = std::cos(tilt) * inward - std::sin(tilt) * side.outward;
        r.col(0) = side.along;
        r.col(1) = r.col(2).cross(r.col(0));
        p.pose.rotation = r;
        p.pose.translation = c;
        p.contacts = {{c, inward}};
        pushes.push_back(placement_to_json(p));
      }
    }
  }
  return {{"plate", {{"length_m", plate.length}, {"width_m", plate.width}, {"height_m", plate.height}}},
          {"grips", grips},
          {"pushes", pushes},
          {"combinations", params.combinations}};
}

}  // namespace platelift
