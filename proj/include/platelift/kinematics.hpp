#pragma once

#include "platelift/geometry.hpp"
#include "platelift/grasp_db.hpp"

#include <json.hpp>

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace platelift {

using Joints = Eigen::Matrix<double, 6, 1>;

/// Revolute joint. `origin` is the fixed transform from the previous joint
/// frame (or the base) to this joint frame at zero angle; the joint then
/// rotates about `axis` expressed in its own frame.
struct RevoluteJoint {
  Pose origin;
  Vec3 axis = Vec3::UnitZ();
  double lower = -2.0 * kPi;
  double upper = 2.0 * kPi;
};

struct SerialChain {
  std::string name = "arm";
  Pose base;
  std::array<RevoluteJoint, 6> joints;
  Pose flange;  // last joint frame -> tool flange
  Pose tool;    // flange -> tool center point
  /// Capsule radius of each link segment: base->j2, j2->j3, ..., j6->flange
  /// (segments between consecutive distinct frame origins).
  std::array<double, 6> link_radii{0.06, 0.05, 0.045, 0.04, 0.04, 0.035};
  Joints home = Joints::Zero();

  /// Throws std::invalid_argument on inverted limits or a non-unit axis.
  void validate() const;
  /// Upper bound on the base-to-TCP distance.
  double reach() const;
};

/// Small 6R collaborative arm (UR3-style Denavit-Hartenberg parameters,
/// about 0.5 m reach), tool pose set separately.
SerialChain reference_arm(const Pose& base, double tool_length = 0.15);

/// World frames of the six joints (after their rotation), the flange and the TCP.
std::vector<Pose> chain_frames(const SerialChain& chain, const Joints& q);

Pose fk(const SerialChain& chain, const Joints& q);

/// Geometric Jacobian at the TCP in world coordinates, rows [linear; angular].
Mat6 jacobian(const SerialChain& chain, const Joints& q);

bool within_limits(const SerialChain& chain, const Joints& q);

/// Orientation error vector (axis * angle) that rotates `from` onto `to`.
Vec3 rotation_error(const Mat3& from, const Mat3& to);

struct IkOptions {
  int max_iterations = 200;
  double damping = 1e-3;
  int perturbed_seeds = 8;
  double position_tolerance = 1e-4;
  double orientation_tolerance = 1e-3;
  /// Ignore rotation about the tool z axis (axisymmetric tools).
  bool free_roll = false;
  unsigned seed = 7;
};

/// Damped-least-squares IK from a single seed. Returns a joint vector inside
/// the limits whose FK matches the target within tolerance, or nullopt.
std::optional<Joints> ik(const SerialChain& chain, const Pose& target, const Joints& seed,
                         const IkOptions& options = {});

/// All distinct solutions reached from the home seed and the perturbed
/// seeds, in seed order.
std::vector<Joints> ik_solutions(const SerialChain& chain, const Pose& target, const IkOptions& options = {});

struct Capsule {
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::Zero();
  double radius = 0.0;
};

/// Oriented box: `pose` places the box center, `half` its half extents.
struct Box {
  Pose pose;
  Vec3 half = Vec3::Zero();
};

double segment_segment_distance(const Vec3& p0, const Vec3& p1, const Vec3& q0, const Vec3& q1);
double point_box_distance(const Vec3& p, const Box& box);
double segment_box_distance(const Vec3& p0, const Vec3& p1, const Box& box);
/// Surface distance; negative means overlap.
double capsule_distance(const Capsule& a, const Capsule& b);

struct HandGeometry {
  double tool_length = 0.15;     // flange to TCP along the approach axis
  double finger_length = 0.045;  // gripper only
  double finger_radius = 0.008;
  double palm_radius = 0.02;
  double body_radius = 0.03;
  double stick_radius = 0.008;   // push tool only
  double open_width = 0.06;      // finger gap when no placement is active
};

struct ArmModel {
  SerialChain chain;
  HandKind hand = HandKind::Grip;
  HandGeometry geometry;
};

struct DualArm {
  ArmModel left;
  ArmModel right;

  const ArmModel& arm(HandKind hand) const { return left.hand == hand ? left : right; }
  bool left_holds(HandKind hand) const { return left.hand == hand; }
};

struct DualArmState {
  Joints left = Joints::Zero();
  Joints right = Joints::Zero();
};

struct CollisionWorld {
  double table_height = 0.0;
  std::vector<Box> obstacles;
  double contact_exemption = 0.005;
};

/// Capsules of the six links for configuration q.
std::vector<Capsule> link_capsules(const SerialChain& chain, const Joints& q);

/// Capsules of the hand at the TCP pose. `placement` (world frame) sets the
/// finger gap and contact offsets; without one the hand is drawn open.
std::vector<Capsule> hand_capsules(const ArmModel& arm, const Pose& tcp, const HandPlacement* placement);

/// True iff any arm primitive intersects the table half-space, an obstacle
/// box, the plate (except near intended contact points) or the other arm.
/// `placements` are the active world-frame placements (at most one per hand);
/// arms without a placement are checked at their given joints, hand open.
bool collides(const DualArm& arms, const DualArmState& state, const PlateModel& plate, const Pose& plate_pose,
              const std::vector<HandPlacement>& placements, const CollisionWorld& world);

/// Arm description JSON: {"name", "base": pose, "model": "reference"} or
/// explicit {"joints": [{"origin", "axis", "limits_rad"}], "flange"}, plus
/// optional "hand", "tool_length_m", "link_radii_m", "home_rad".
ArmModel arm_from_json(const nlohmann::json& j);
nlohmann::json arm_to_json(const ArmModel& arm);

}  // namespace platelift
