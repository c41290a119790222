#pragma once

#include "platelift/geometry.hpp"

#include <json.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace platelift {

enum class HandKind { Grip, Push };

std::string to_string(HandKind hand);

/// A point where a hand presses on the plate. `normal` is the unit direction
/// of the force applied to the plate (the inward surface normal).
struct HandContact {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();

  friend bool operator==(const HandContact&, const HandContact&) = default;
};

/// Annotated hand placement. `pose` is the tool-center-point frame; its z
/// axis is the approach direction.
struct HandPlacement {
  std::string id;
  HandKind hand = HandKind::Grip;
  Pose pose;
  std::vector<HandContact> contacts;

  friend bool operator==(const HandPlacement& a, const HandPlacement& b);
};

/// A robot hand configuration set: empty, a grip, a push, or both.
struct RConf {
  std::optional<HandPlacement> grip;
  std::optional<HandPlacement> push;

  bool empty() const { return !grip && !push; }
  std::size_t size() const { return (grip ? 1u : 0u) + (push ? 1u : 0u); }
  std::string label() const;
};

/// Vacuum lifter attachment, given externally per scenario.
struct SuctionConfig {
  Vec3 point = Vec3::Zero();  // plate frame, on the top face
  double pad_radius = 0.0175;
  double kappa = 30.0;
  double mu = 0.5;
  double max_force = 20.0;

  void validate(const PlateModel& plate, double tolerance = 1e-6) const;
};

void to_json(nlohmann::json& j, const SuctionConfig& s);
void from_json(const nlohmann::json& j, SuctionConfig& s);

class GraspValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PlacementRules {
  double max_gripper_stroke = 0.085;
  double tolerance = 1e-6;
};

/// Validates one placement against the plate; throws GraspValidationError
/// naming the entry.
void validate_placement(const HandPlacement& placement, const PlateModel& plate, const PlacementRules& rules = {});

/// Parses a grasps.json document. The result always starts with the empty
/// configuration, followed by single grips, single pushes and, when the
/// document enables "combinations", every grip+push pair.
std::vector<RConf> load_rconf_db(const nlohmann::json& document, const PlateModel& plate,
                                 const PlacementRules& rules = {});

nlohmann::json placement_to_json(const HandPlacement& p);
HandPlacement placement_from_json(const nlohmann::json& j);

/// Every placement composed with the plate pose (grip first, then push).
std::vector<HandPlacement> to_world(const RConf& rconf, const Pose& plate_pose);
HandPlacement to_world(const HandPlacement& placement, const Pose& plate_pose);

/// True iff every placement of `a` appears identically in `b`.
bool rconf_subset(const RConf& a, const RConf& b);

struct GraspGeneratorParams {
  double spacing = 0.1;          // along each side (m)
  double grip_inset = 0.02;      // pinch depth from the side face (m)
  double push_inset = 0.03;      // push band distance from the side faces (m)
  double push_tilt_deg = 60.0;   // stick axis angle away from the face normal
  bool top_pushes = true;
  bool bottom_pushes = true;
  bool combinations = true;
};

/// Side pinch grips across the plate thickness and stick pushes on the
/// top/bottom faces, on a grid with the given spacing.
nlohmann::json generate_grasps(const PlateModel& plate, const GraspGeneratorParams& params);

}  // namespace platelift
