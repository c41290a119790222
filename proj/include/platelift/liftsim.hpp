#pragma once

#include "platelift/geometry.hpp"
#include "platelift/grasp_db.hpp"
#include "platelift/msg.hpp"

#include <json.hpp>

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace platelift {

/// Velocity-based impedance controller
///   M_d (dV - dV_d) + B_d (V - V_d) + K_d int(V - V_d) = E.
struct ControllerParams {
  double M_d = 1.0;
  double B_d = 2.0;
  double K_d = 1.0;
  double V_d = 0.0;
  double dV_d = 0.0;
  double dt = 0.008;
  /// Lower bound on the output velocity; nullopt disables it.
  std::optional<double> velocity_floor = 0.0;
  /// Upper bound (hand speed limit).
  double velocity_ceiling = std::numeric_limits<double>::infinity();
  double integral_limit = 0.5;
  /// Tolerated |F_push - F_goal| at the end of a still lifter segment (N).
  /// The floor keeps the hands from backing off an overshoot.
  double force_band = 1.5;

  void validate() const;
};

void to_json(nlohmann::json& j, const ControllerParams& p);
void from_json(const nlohmann::json& j, ControllerParams& p);

struct ControllerState {
  double V = 0.0;
  double integral = 0.0;
  double E = 0.0;
};

struct ControllerOutput {
  double V_out = 0.0;
  ControllerState state;
};

/// One explicit Euler step with the error E = F_goal - F.
ControllerOutput controller_step(const ControllerState& state, double E, const ControllerParams& params);

/// Piecewise-constant lifter velocity. With a jitter seed every moving
/// segment is chopped into chunks whose speed and length vary randomly.
struct LifterProfile {
  struct Segment {
    double duration = 0.0;
    double speed = 0.0;
  };

  std::vector<Segment> segments;
  std::optional<std::uint64_t> jitter_seed;
  double jitter_speed = 0.3;   // relative speed spread
  double jitter_chunk = 0.25;  // nominal chunk length (s)

  void validate() const;
  double duration() const;
  /// Segments after jitter; deterministic in the seed.
  std::vector<Segment> expanded() const;
};

void to_json(nlohmann::json& j, const LifterProfile& p);
void from_json(const nlohmann::json& j, LifterProfile& p);

/// Stop-and-go operation of a lifter switch by hand.
LifterProfile default_profile(std::uint64_t seed = 11);
LifterProfile zero_profile(double duration);

/// Vertical forces the hands should bear and where they act, taken from the
/// optimized wrenches of a terminal No-Contact node.
struct TargetForces {
  double push = 0.0;
  double grip = 0.0;
  double suction = 0.0;
  Vec2 push_point = Vec2::Zero();     // horizontal offsets from the CoM (world axes)
  Vec2 grip_point = Vec2::Zero();
  Vec2 suction_point = Vec2::Zero();
  bool has_push = false;
  bool has_grip = false;
};

class LiftError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws LiftError when the node is not No-Contact or has no solution.
TargetForces target_forces(const MsgNode& node);

/// max(0, m g - suction max).
double red_line(const PlateModel& plate, const SuctionConfig& suction, double gravity = 9.81);

struct PlantParams {
  double suction_stiffness = 5000.0;  // N/m
  double suction_damping = 50.0;
  double pad_rot_stiffness = 50.0;    // N m/rad
  double pad_rot_damping = 1.0;
  double hand_stiffness = 20000.0;
  double hand_damping = 100.0;
  double substep = 0.001;
  double sensor_noise = 0.2;  // N, standard deviation
  std::uint64_t noise_seed = 5;
  /// Pad tension above the vacuum limit for longer than this detaches the pad.
  double transient_window = 0.5;  // s

  void validate() const;
};

void to_json(nlohmann::json& j, const PlantParams& p);
void from_json(const nlohmann::json& j, PlantParams& p);

struct TraceRow {
  double time = 0.0;
  double F_push = 0.0;
  double F_grip = 0.0;
  double F_sum = 0.0;
  double V_out = 0.0;
  double lifter_height = 0.0;
  double pad_tension = 0.0;
  double red_line = 0.0;
};

/// Force error of the tracked hand where a still lifter segment ends.
struct SteadyCheck {
  double time = 0.0;
  double force = 0.0;
  double goal = 0.0;
  bool within_band = false;
};

struct Trace {
  std::vector<TraceRow> rows;
  std::vector<SteadyCheck> steady_checks;
  bool detached = false;
  double detach_time = 0.0;
  std::string message;
  double mass = 0.0;
  double gravity = 9.81;
  double vacuum_limit = 0.0;
  TargetForces targets;

  bool success() const { return !detached; }
};

/// Lifts with the lifter following `profile`; both hands move with the
/// controller output computed from the pushing hand's force error. The
/// vacuum limit of the pad is `suction_max`.
Trace simulate_lift(const PlateModel& plate, const TargetForces& targets, double suction_max,
                    const LifterProfile& profile, const ControllerParams& controller, const PlantParams& plant,
                    double duration, double gravity = 9.81);
Trace simulate_lift(const MsgNode& terminal, const PlateModel& plate, const SuctionConfig& suction,
                    const LifterProfile& profile, const ControllerParams& controller, const PlantParams& plant,
                    double duration);

std::string trace_to_csv(const Trace& trace);
nlohmann::json trace_events_json(const Trace& trace);

}  // namespace platelift
