#pragma once

#include "platelift/contact_graph.hpp"
#include "platelift/geometry.hpp"
#include "platelift/grasp_db.hpp"
#include "platelift/socp.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace platelift {

enum class ContactKind { GripFinger, Push, Environment, Suction };

std::string to_string(ContactKind kind);

/// A contact acting on the plate. `frame` is expressed in the plate central
/// frame (origin at the center of mass, axes aligned with the world); its z
/// axis is the direction in which the normal force acts on the plate.
struct ContactSpec {
  ContactKind kind = ContactKind::Environment;
  Pose frame;
  double mu = 0.0;
  double epsilon = 0.01;     // grip fingers
  double pad_radius = 0.0;   // suction
  double kappa = 0.0;        // suction
  std::string label;
};

/// Wrench [f; tau] in a named frame.
struct Wrench {
  Vec3 force = Vec3::Zero();
  Vec3 torque = Vec3::Zero();
  std::string frame;

  Vec6 stacked() const;
};

struct ForceSystem {
  std::vector<ContactSpec> contacts;
  double mass = 0.0;
  double gravity = 9.81;
  Eigen::MatrixXd G;  // 6 x 6n
  Vec6 omega_g = Vec6::Zero();
};

struct ObjectiveWeights {
  double k_gp = 1.0;
  double k_s = 1.0;

  void validate() const;
};

struct ForceLimits {
  double hand_payload = 15.0;  // bound on f_gp+
  double suction_max = 0.0;    // bound on f_s+
};

struct ForceSolution {
  SolverStatus status = SolverStatus::NumericalFailure;
  std::vector<Vec6> wrenches;  // per contact, contact frame
  double objective = 0.0;
  double f_gp_plus = 0.0;
  double f_s_plus = 0.0;
  double residual = 0.0;
  int iterations = 0;

  bool feasible() const { return status == SolverStatus::Optimal; }
};

struct PhysicsParams {
  double gravity = 9.81;
  double mu_grip = 0.8;
  double mu_push = 0.4;
  double mu_env = 0.3;
  double epsilon = 0.01;
  double hand_payload = 15.0;
  ObjectiveWeights weights;

  void validate() const;
};

void to_json(nlohmann::json& j, const PhysicsParams& p);
void from_json(const nlohmann::json& j, PhysicsParams& p);

/// 6x6 map from a contact-frame wrench to the plate central frame:
/// [[R, 0], [S(p) R, R]].
Mat6 grasp_map(const Pose& contact_frame);

/// Plate central frame in world coordinates (center of mass, world axes).
Vec3 center_of_mass(const PlateModel& plate, const Pose& plate_pose);

/// One point contact per vertex of the principal contact, normal along the
/// support normal (world +z).
std::vector<ContactSpec> environment_contacts(const PlateModel& plate, const Pose& plate_pose,
                                              const PrincipalContact& pc, double mu);

/// Finger or stick contacts of a world-frame placement.
std::vector<ContactSpec> hand_contacts(const HandPlacement& world_placement, const Vec3& com,
                                       const PhysicsParams& params);

ContactSpec suction_contact(const SuctionConfig& suction, const PlateModel& plate, const Pose& plate_pose);

ForceSystem assemble_system(const PlateModel& plate, const std::vector<ContactSpec>& contacts, double gravity = 9.81);

/// Contacts for a plate pose in a given PC with the given hand placements
/// and optional suction, ordered grip fingers, push, suction, environment.
ForceSystem node_system(const PlateModel& plate, const Pose& plate_pose, const PrincipalContact& pc,
                        const std::vector<HandPlacement>& world_placements, const SuctionConfig* suction,
                        const PhysicsParams& params);

ForceSolution solve_socp(const ForceSystem& system, const ObjectiveWeights& weights, const ForceLimits& limits,
                         const SolverSettings& settings = {});

struct ResidualReport {
  double equilibrium_residual = 0.0;  // ||G F + Omega_g||_inf
  double worst_cone_margin = 0.0;     // most negative constraint slack (N or N m)
  std::string worst_constraint;

  bool ok(double tol = 1e-6) const { return equilibrium_residual <= tol && worst_cone_margin >= -tol; }
};

/// Recomputes equilibrium and every constraint from the raw wrenches.
ResidualReport verify_solution(const ForceSystem& system, const ForceSolution& solution, const ForceLimits& limits);

/// Sum of the wrenches of the contacts of one kind, in world axes, taken
/// about `point` (world frame); `com` locates the plate central frame.
Vec6 resultant_wrench(const ForceSystem& system, const ForceSolution& solution, ContactKind kind, const Vec3& com,
                      const Vec3& point);

}  // namespace platelift
