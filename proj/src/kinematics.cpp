#include "platelift/kinematics.hpp"

#include "platelift/json_io.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace platelift {

using nlohmann::json;

void SerialChain::validate() const {
  for (std::size_t i = 0; i < joints.size(); ++i) {
    const auto& j = joints[i];
    if (!(j.lower < j.upper)) throw std::invalid_argument(name + ": joint " + std::to_string(i + 1) + " has lower >= upper");
    if (std::abs(j.axis.norm() - 1.0) > 1e-9) throw std::invalid_argument(name + ": joint axis is not a unit vector");
    if (!j.origin.is_valid(1e-6)) throw std::invalid_argument(name + ": joint origin is not a rigid transform");
  }
  for (double r : link_radii)
    if (!(r >= 0.0)) throw std::invalid_argument(name + ": negative link radius");
}

double SerialChain::reach() const {
  double r = flange.translation.norm() + tool.translation.norm();
  for (std::size_t i = 1; i < joints.size(); ++i) r += joints[i].origin.translation.norm();
  return r + joints[0].origin.translation.norm();
}

namespace {

Pose dh(double d, double a, double alpha) {
  Pose p;
  p.translation = Vec3(a, 0.0, d);
  p.rotation = Eigen::AngleAxisd(alpha, Vec3::UnitX()).toRotationMatrix();
  return p;
}

Pose revolve(const RevoluteJoint& j, double angle) {
  Pose p = j.origin;
  p.rotation = j.origin.rotation * Eigen::AngleAxisd(angle, j.axis).toRotationMatrix();
  return p;
}

}  // namespace

SerialChain reference_arm(const Pose& base, double tool_length) {
  const std::array<double, 6> d{0.1519, 0.0, 0.0, 0.11235, 0.08535, 0.0819};
  const std::array<double, 6> a{0.0, -0.24365, -0.21325, 0.0, 0.0, 0.0};
  const std::array<double, 6> alpha{kPi / 2, 0.0, 0.0, kPi / 2, -kPi / 2, 0.0};
  SerialChain c;
  c.name = "reference";
  c.base = base;
  c.joints[0].origin = Pose::identity();
  for (int i = 1; i < 6; ++i) c.joints[i].origin = dh(d[i - 1], a[i - 1], alpha[i - 1]);
  c.flange = dh(d[5], a[5], alpha[5]);
  c.tool = Pose::from_translation(Vec3(0, 0, tool_length));
  c.home << 0.0, -kPi / 2, kPi / 2, -kPi / 2, -kPi / 2, 0.0;
  return c;
}

std::vector<Pose> chain_frames(const SerialChain& chain, const Joints& q) {
  std::vector<Pose> frames;
  frames.reserve(8);
  Pose t = chain.base;
  for (int i = 0; i < 6; ++i) {
    t = t * revolve(chain.joints[i], q[i]);
    frames.push_back(t);
  }
  t = t * chain.flange;
  frames.push_back(t);
  frames.push_back(t * chain.tool);
  return frames;
}

Pose fk(const SerialChain& chain, const Joints& q) { return chain_frames(chain, q).back(); }

Mat6 jacobian(const SerialChain& chain, const Joints& q) {
  const auto frames = chain_frames(chain, q);
  const Vec3 p = frames.back().translation;
  Mat6 J;
  for (int i = 0; i < 6; ++i) {
    const Vec3 z = frames[i].rotation * chain.joints[i].axis;
    J.block<3, 1>(0, i) = z.cross(p - frames[i].translation);
    J.block<3, 1>(3, i) = z;
  }
  return J;
}

bool within_limits(const SerialChain& chain, const Joints& q) {
  for (int i = 0; i < 6; ++i)
    if (!(q[i] >= chain.joints[i].lower && q[i] <= chain.joints[i].upper)) return false;
  return true;
}

Vec3 rotation_error(const Mat3& from, const Mat3& to) {
  const Eigen::AngleAxisd aa(to * from.transpose());
  return aa.axis() * aa.angle();
}

namespace {

Mat3 roll_free_target(const Mat3& current, const Mat3& target) {
  const Vec3 zc = current.col(2);
  const Vec3 zt = target.col(2);
  const Vec3 axis = zc.cross(zt);
  const double s = axis.norm();
  const double c = zc.dot(zt);
  if (s < 1e-12) {
    if (c > 0) return current;
    return Eigen::AngleAxisd(kPi, current.col(0)).toRotationMatrix() * current;
  }
  return Eigen::AngleAxisd(std::atan2(s, c), axis / s).toRotationMatrix() * current;
}

bool wrap_into_limits(const SerialChain& chain, Joints& q) {
  for (int i = 0; i < 6; ++i) {
    const auto& j = chain.joints[i];
    while (q[i] > j.upper) q[i] -= 2.0 * kPi;
    while (q[i] < j.lower) q[i] += 2.0 * kPi;
    if (q[i] > j.upper) return false;
  }
  return true;
}

}  // namespace

std::optional<Joints> ik(const SerialChain& chain, const Pose& target, const Joints& seed, const IkOptions& options) {
  if (!target.translation.allFinite() || !target.rotation.allFinite()) return std::nullopt;
  if ((target.translation - chain.base.translation).norm() > chain.reach()) return std::nullopt;
  Joints q = seed;
  for (int it = 0; it <= options.max_iterations; ++it) {
    const Pose cur = fk(chain, q);
    const Mat3 goal_rot = options.free_roll ? roll_free_target(cur.rotation, target.rotation) : target.rotation;
    Vec6 e;
    e.head<3>() = target.translation - cur.translation;
    e.tail<3>() = rotation_error(cur.rotation, goal_rot);
    if (e.head<3>().norm() <= 0.5 * options.position_tolerance &&
        e.tail<3>().norm() <= 0.5 * options.orientation_tolerance) {
      if (!wrap_into_limits(chain, q)) return std::nullopt;
      return q;
    }
    if (it == options.max_iterations) break;
    const Mat6 J = jacobian(chain, q);
    const Mat6 JJt = J * J.transpose() + options.damping * Mat6::Identity();
    Joints dq = J.transpose() * JJt.ldlt().solve(e);
    const double m = dq.cwiseAbs().maxCoeff();
    if (m > 0.4) dq *= 0.4 / m;
    q += dq;
  }
  return std::nullopt;
}

std::vector<Joints> ik_solutions(const SerialChain& chain, const Pose& target, const IkOptions& options) {
  std::vector<Joints> seeds{chain.home};
  std::mt19937 rng(options.seed);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  for (int s = 0; s < options.perturbed_seeds; ++s) {
    Joints q = chain.home;
    for (int i = 0; i < 6; ++i) q[i] += u(rng);
    seeds.push_back(q);
  }
  std::vector<Joints> out;
  for (const auto& s : seeds) {
    auto q = ik(chain, target, s, options);
    if (!q) continue;
    bool dup = false;
    for (const auto& o : out) dup = dup || (o - *q).cwiseAbs().maxCoeff() < 1e-3;
    if (!dup) out.push_back(*q);
  }
  return out;
}

// Closest points between segments (Ericson, Real-Time Collision Detection 5.1.9).
double segment_segment_distance(const Vec3& p1, const Vec3& q1, const Vec3& p2, const Vec3& q2) {
  const Vec3 d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
  const double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
  constexpr double eps = 1e-18;
  double s = 0.0, t = 0.0;
  if (a <= eps && e <= eps) return r.norm();
  if (a <= eps) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= eps) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      s = denom > eps ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return ((p1 + d1 * s) - (p2 + d2 * t)).norm();
}

double point_box_distance(const Vec3& p, const Box& box) {
  const Vec3 local = box.pose.rotation.transpose() * (p - box.pose.translation);
  const Vec3 outside = (local.cwiseAbs() - box.half).cwiseMax(0.0);
  return outside.norm();
}

namespace {

// Distance from a segment to a box and the segment parameter where it is
// attained. The point-box distance is convex along the segment.
std::pair<double, double> segment_box_closest(const Vec3& p0, const Vec3& p1, const Box& box) {
  auto f = [&](double t) { return point_box_distance(p0 + t * (p1 - p0), box); };
  double lo = 0.0, hi = 1.0;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < 60; ++i) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = f(x2);
    }
  }
  double best_t = 0.5 * (lo + hi), best = f(best_t);
  for (double t : {0.0, 1.0}) {
    const double v = f(t);
    if (v < best) best = v, best_t = t;
  }
  return {best, best_t};
}

}  // namespace

double segment_box_distance(const Vec3& p0, const Vec3& p1, const Box& box) {
  return segment_box_closest(p0, p1, box).first;
}

double capsule_distance(const Capsule& a, const Capsule& b) {
  return segment_segment_distance(a.a, a.b, b.a, b.b) - a.radius - b.radius;
}

std::vector<Capsule> link_capsules(const SerialChain& chain, const Joints& q) {
  const auto frames = chain_frames(chain, q);
  std::vector<Vec3> pts{chain.base.translation};
  for (int i = 0; i < 7; ++i) {
    const Vec3& p = frames[i].translation;
    if ((p - pts.back()).norm() > 1e-9) pts.push_back(p);
  }
  std::vector<Capsule> caps;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i)
    caps.push_back({pts[i], pts[i + 1], chain.link_radii[std::min<std::size_t>(i, chain.link_radii.size() - 1)]});
  return caps;
}

std::vector<Capsule> hand_capsules(const ArmModel& arm, const Pose& tcp, const HandPlacement* placement) {
  const HandGeometry& g = arm.geometry;
  const Vec3 approach = tcp.rotation.col(2);
  const Vec3 flange = tcp.translation - approach * g.tool_length;
  std::vector<Capsule> caps;
  if (arm.hand == HandKind::Grip) {
    const Vec3 palm = tcp.translation - approach * g.finger_length;
    Vec3 tips[2];
    if (placement && placement->contacts.size() == 2) {
      for (int i = 0; i < 2; ++i) {
        const auto& c = placement->contacts[i];
        tips[i] = c.point - c.normal * (g.finger_radius + 0.001);
      }
    } else {
      const Vec3 x = tcp.rotation.col(0);
      tips[0] = tcp.translation + x * (0.5 * g.open_width + g.finger_radius);
      tips[1] = tcp.translation - x * (0.5 * g.open_width + g.finger_radius);
    }
    Vec3 bases[2];
    for (int i = 0; i < 2; ++i) {
      bases[i] = tips[i] - approach * g.finger_length;
      caps.push_back({tips[i], bases[i], g.finger_radius});
    }
    caps.push_back({bases[0], bases[1], g.palm_radius});
    caps.push_back({palm - approach * g.palm_radius, flange, g.body_radius});
  } else {
    Vec3 tip = tcp.translation;
    if (placement && placement->contacts.size() == 1) {
      const auto& c = placement->contacts[0];
      const double cosang = std::max(0.2, approach.dot(c.normal));
      tip = c.point - approach * ((g.stick_radius + 0.001) / cosang);
    }
    caps.push_back({tip, flange, g.stick_radius});
  }
  return caps;
}

bool collides(const DualArm& arms, const DualArmState& state, const PlateModel& plate, const Pose& plate_pose,
              const std::vector<HandPlacement>& placements, const CollisionWorld& world) {
  const Box plate_box{plate_pose, Vec3(0.5 * plate.length, 0.5 * plate.width, 0.5 * plate.height)};
  struct ArmPrims {
    std::vector<Capsule> links;
    std::vector<Capsule> hand;
    const HandPlacement* placement = nullptr;
  };
  auto build = [&](const ArmModel& arm, const Joints& q) {
    ArmPrims p;
    for (const auto& pl : placements)
      if (pl.hand == arm.hand) p.placement = &pl;
    p.links = link_capsules(arm.chain, q);
    p.hand = hand_capsules(arm, fk(arm.chain, q), p.placement);
    return p;
  };
  const ArmPrims prims[2] = {build(arms.left, state.left), build(arms.right, state.right)};

  auto hits_environment = [&](const Capsule& c, bool skip_table) {
    if (!skip_table && std::min(c.a.z(), c.b.z()) - c.radius < world.table_height) return true;
    for (const auto& box : world.obstacles)
      if (segment_box_distance(c.a, c.b, box) < c.radius) return true;
    return false;
  };
  for (const auto& p : prims) {
    for (std::size_t i = 0; i < p.links.size(); ++i) {
      const auto& c = p.links[i];
      if (hits_environment(c, i == 0)) return true;
      if (segment_box_distance(c.a, c.b, plate_box) < c.radius) return true;
    }
    for (const auto& c : p.hand) {
      if (hits_environment(c, false)) return true;
      const auto [d, t] = segment_box_closest(c.a, c.b, plate_box);
      if (d >= c.radius) continue;
      bool exempt = false;
      if (p.placement) {
        const Vec3 closest = c.a + t * (c.b - c.a);
        for (const auto& contact : p.placement->contacts)
          exempt = exempt || (closest - contact.point).norm() <= c.radius + world.contact_exemption;
      }
      if (!exempt) return true;
    }
  }
  for (const auto* ga : {&prims[0].links, &prims[0].hand})
    for (const auto* gb : {&prims[1].links, &prims[1].hand})
      for (const auto& a : *ga)
        for (const auto& b : *gb)
          if (capsule_distance(a, b) < 0.0) return true;
  return false;
}

ArmModel arm_from_json(const json& j) {
  ArmModel arm;
  const Pose base = j.contains("base") ? pose_from_json(j.at("base")) : Pose::identity();
  const double tool_length = j.value("tool_length_m", 0.15);
  const std::string model = j.value("model", std::string(j.contains("joints") ? "custom" : "reference"));
  if (model == "reference") {
    arm.chain = reference_arm(base, tool_length);
  } else if (model == "custom") {
    const auto& js = j.at("joints");
    if (!js.is_array() || js.size() != 6) throw std::invalid_argument("arm description needs exactly 6 joints");
    arm.chain.base = base;
    for (int i = 0; i < 6; ++i) {
      const auto& e = js[i];
      auto& jt = arm.chain.joints[i];
      jt.origin = pose_from_json(e.at("origin"));
      jt.axis = vec3_from_json(e.at("axis"));
      if (e.contains("limits_rad")) {
        jt.lower = e.at("limits_rad")[0].get<double>();
        jt.upper = e.at("limits_rad")[1].get<double>();
      }
    }
    if (j.contains("flange")) arm.chain.flange = pose_from_json(j.at("flange"));
    arm.chain.tool = Pose::from_translation(Vec3(0, 0, tool_length));
  } else {
    throw std::invalid_argument("unknown arm model '" + model + "'");
  }
  arm.chain.name = j.value("name", arm.chain.name);
  if (j.contains("link_radii_m")) {
    const auto& r = j.at("link_radii_m");
    if (!r.is_array() || r.size() != 6) throw std::invalid_argument("link_radii_m needs 6 entries");
    for (int i = 0; i < 6; ++i) arm.chain.link_radii[i] = r[i].get<double>();
  }
  if (j.contains("home_rad")) {
    const auto& h = j.at("home_rad");
    if (!h.is_array() || h.size() != 6) throw std::invalid_argument("home_rad needs 6 entries");
    for (int i = 0; i < 6; ++i) arm.chain.home[i] = h[i].get<double>();
  }
  const std::string hand = j.value("hand", std::string("grip"));
  if (hand == "grip")
    arm.hand = HandKind::Grip;
  else if (hand == "push")
    arm.hand = HandKind::Push;
  else
    throw std::invalid_argument("unknown hand '" + hand + "'");
  arm.geometry.tool_length = tool_length;
  arm.chain.validate();
  return arm;
}

json arm_to_json(const ArmModel& arm) {
  json joints = json::array();
  for (const auto& jt : arm.chain.joints)
    joints.push_back({{"origin", pose_to_json(jt.origin)}, {"axis", vec_to_json(jt.axis)}, {"limits_rad", {jt.lower, jt.upper}}});
  json home = json::array(), radii = json::array();
  for (int i = 0; i < 6; ++i) home.push_back(arm.chain.home[i]), radii.push_back(arm.chain.link_radii[i]);
  return {{"name", arm.chain.name},     {"model", "custom"},       {"base", pose_to_json(arm.chain.base)},
          {"joints", joints},           {"flange", pose_to_json(arm.chain.flange)},
          {"tool_length_m", arm.geometry.tool_length}, {"link_radii_m", radii}, {"home_rad", home},
          {"hand", to_string(arm.hand)}};
}

}  // namespace platelift
