#include "platelift/liftsim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

namespace platelift {

using nlohmann::json;

void ControllerParams::validate() const {
  if (!(M_d > 0.0)) throw std::invalid_argument("controller M_d must be positive");
  if (!(B_d >= 0.0) || !(K_d >= 0.0)) throw std::invalid_argument("controller B_d and K_d must be non-negative");
  if (!(dt > 0.0)) throw std::invalid_argument("controller dt must be positive");
  if (!(integral_limit > 0.0)) throw std::invalid_argument("integral limit must be positive");
  if (!(force_band >= 0.0)) throw std::invalid_argument("force band must be non-negative");
  if (velocity_floor && !(velocity_ceiling >= *velocity_floor))
    throw std::invalid_argument("velocity ceiling below the floor");
}

void to_json(json& j, const ControllerParams& p) {
  j = {{"M_d", p.M_d}, {"B_d", p.B_d}, {"K_d", p.K_d}, {"V_d", p.V_d}, {"dt", p.dt},
       {"integral_limit", p.integral_limit}, {"force_band_n", p.force_band}};
  j["velocity_floor"] = p.velocity_floor ? json(*p.velocity_floor) : json(nullptr);
  j["max_speed"] = std::isfinite(p.velocity_ceiling) ? json(p.velocity_ceiling) : json(nullptr);
}

void from_json(const json& j, ControllerParams& p) {
  p.M_d = j.value("M_d", p.M_d);
  p.K_d = j.value("K_d", p.K_d);
  // critical damping unless given
  p.B_d = j.contains("B_d") ? j.at("B_d").get<double>() : 2.0 * std::sqrt(p.K_d * p.M_d);
  p.V_d = j.value("V_d", p.V_d);
  p.dt = j.value("dt", p.dt);
  p.integral_limit = j.value("integral_limit", p.integral_limit);
  p.force_band = j.value("force_band_n", p.force_band);
  if (j.contains("velocity_floor")) {
    const auto& f = j.at("velocity_floor");
    p.velocity_floor = f.is_null() ? std::nullopt : std::optional<double>(f.get<double>());
  }
  if (j.contains("max_speed") && !j.at("max_speed").is_null()) p.velocity_ceiling = j.at("max_speed").get<double>();
}

ControllerOutput controller_step(const ControllerState& state, double E, const ControllerParams& params) {
  ControllerOutput out;
  const double dev = state.V - params.V_d;
  const double accel = params.dV_d + (E - params.B_d * dev - params.K_d * state.integral) / params.M_d;
  double I = state.integral + params.dt * dev;
  I = std::clamp(I, -params.integral_limit, params.integral_limit);
  double V = state.V + params.dt * accel;
  if (params.velocity_floor) V = std::max(V, *params.velocity_floor);
  V = std::min(V, params.velocity_ceiling);
  out.state = {V, I, E};
  out.V_out = V;
  return out;
}

void LifterProfile::validate() const {
  if (segments.empty()) throw std::invalid_argument("lifter profile has no segments");
  for (const auto& s : segments) {
    if (!(s.duration > 0.0)) throw std::invalid_argument("lifter profile durations must be positive");
    if (!std::isfinite(s.speed)) throw std::invalid_argument("lifter profile speed is not finite");
  }
  if (!(jitter_speed >= 0.0 && jitter_speed < 1.0)) throw std::invalid_argument("jitter_speed must be in [0, 1)");
  if (!(jitter_chunk > 0.0)) throw std::invalid_argument("jitter_chunk must be positive");
}

double LifterProfile::duration() const {
  double t = 0.0;
  for (const auto& s : segments) t += s.duration;
  return t;
}

std::vector<LifterProfile::Segment> LifterProfile::expanded() const {
  if (!jitter_seed) return segments;
  std::mt19937_64 rng(*jitter_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Segment> out;
  for (const auto& s : segments) {
    if (s.speed == 0.0) {
      out.push_back(s);
      continue;
    }
    double left = s.duration;
    while (left > 1e-12) {
      double len = jitter_chunk * (0.5 + unit(rng));
      if (len > left || left - len < 0.25 * jitter_chunk) len = left;
      const double speed = s.speed * (1.0 + jitter_speed * (2.0 * unit(rng) - 1.0));
      out.push_back({len, speed});
      left -= len;
    }
  }
  return out;
}

void to_json(json& j, const LifterProfile& p) {
  json segs = json::array();
  for (const auto& s : p.segments) segs.push_back({{"duration_s", s.duration}, {"speed_mps", s.speed}});
  j = {{"segments", segs}, {"jitter_speed", p.jitter_speed}, {"jitter_chunk_s", p.jitter_chunk}};
  j["jitter_seed"] = p.jitter_seed ? json(*p.jitter_seed) : json(nullptr);
}

void from_json(const json& j, LifterProfile& p) {
  p.segments.clear();
  for (const auto& s : j.at("segments"))
    p.segments.push_back({s.at("duration_s").get<double>(), s.at("speed_mps").get<double>()});
  p.jitter_speed = j.value("jitter_speed", p.jitter_speed);
  p.jitter_chunk = j.value("jitter_chunk_s", p.jitter_chunk);
  p.jitter_seed.reset();
  if (j.contains("jitter_seed") && !j.at("jitter_seed").is_null()) p.jitter_seed = j.at("jitter_seed").get<std::uint64_t>();
  p.validate();
}

LifterProfile default_profile(std::uint64_t seed) {
  LifterProfile p;
  p.segments = {{1.0, 0.0}, {1.5, 0.03}, {0.6, 0.0}, {1.2, 0.04}, {0.4, 0.0}, {1.5, 0.03}, {2.5, 0.0}};
  p.jitter_seed = seed;
  return p;
}

LifterProfile zero_profile(double duration) {
  LifterProfile p;
  p.segments = {{duration, 0.0}};
  return p;
}

TargetForces target_forces(const MsgNode& node) {
  if (!node.pc.is_none()) throw LiftError("terminal node " + std::to_string(node.id) + " is not No Contact");
  const auto& sys = node.system;
  if (!node.forces.feasible() || node.forces.wrenches.size() != sys.contacts.size())
    throw LiftError("terminal node " + std::to_string(node.id) + " has no force solution");
  TargetForces t;
  Vec2 grip_sum = Vec2::Zero();
  int grips = 0;
  for (std::size_t i = 0; i < sys.contacts.size(); ++i) {
    const auto& c = sys.contacts[i];
    const double fz = (c.frame.rotation * node.forces.wrenches[i].head<3>()).z();
    const Vec2 p = c.frame.translation.head<2>();
    switch (c.kind) {
      case ContactKind::GripFinger:
        t.grip += fz;
        grip_sum += p;
        ++grips;
        t.has_grip = true;
        break;
      case ContactKind::Push:
        t.push += fz;
        t.push_point = p;
        t.has_push = true;
        break;
      case ContactKind::Suction:
        t.suction += fz;
        t.suction_point = p;
        break;
      case ContactKind::Environment:
        throw LiftError("terminal node " + std::to_string(node.id) + " still touches the support");
    }
  }
  if (grips > 0) t.grip_point = grip_sum / grips;
  return t;
}

double red_line(const PlateModel& plate, const SuctionConfig& suction, double gravity) {
  return std::max(0.0, plate.mass * gravity - suction.max_force);
}

void PlantParams::validate() const {
  if (!(suction_stiffness > 0.0) || !(hand_stiffness > 0.0) || !(pad_rot_stiffness > 0.0))
    throw std::invalid_argument("plant stiffnesses must be positive");
  if (!(suction_damping >= 0.0) || !(hand_damping >= 0.0) || !(pad_rot_damping >= 0.0))
    throw std::invalid_argument("plant damping must be non-negative");
  if (!(substep > 0.0)) throw std::invalid_argument("plant substep must be positive");
  if (!(sensor_noise >= 0.0)) throw std::invalid_argument("sensor noise must be non-negative");
  if (!(transient_window >= 0.0)) throw std::invalid_argument("transient window must be non-negative");
}

void to_json(json& j, const PlantParams& p) {
  j = {{"suction_stiffness", p.suction_stiffness}, {"suction_damping", p.suction_damping},
       {"pad_rot_stiffness", p.pad_rot_stiffness}, {"pad_rot_damping", p.pad_rot_damping},
       {"hand_stiffness", p.hand_stiffness},       {"hand_damping", p.hand_damping},
       {"substep", p.substep},                     {"sensor_noise", p.sensor_noise},
       {"noise_seed", p.noise_seed},               {"transient_window", p.transient_window}};
}

void from_json(const json& j, PlantParams& p) {
  p.suction_stiffness = j.value("suction_stiffness", p.suction_stiffness);
  p.suction_damping = j.value("suction_damping", p.suction_damping);
  p.pad_rot_stiffness = j.value("pad_rot_stiffness", p.pad_rot_stiffness);
  p.pad_rot_damping = j.value("pad_rot_damping", p.pad_rot_damping);
  p.hand_stiffness = j.value("hand_stiffness", p.hand_stiffness);
  p.hand_damping = j.value("hand_damping", p.hand_damping);
  p.substep = j.value("substep", p.substep);
  p.sensor_noise = j.value("sensor_noise", p.sensor_noise);
  p.noise_seed = j.value("noise_seed", p.noise_seed);
  p.transient_window = j.value("transient_window", p.transient_window);
}

namespace {

// Plate reduced to heave z, roll phi (about x) and pitch theta (about y),
// small angles about the terminal pose. A point at horizontal offset (x, y)
// from the CoM rises by z + y phi - x theta.
struct Body {
  Eigen::Vector3d q = Eigen::Vector3d::Zero();
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
};

Eigen::Vector3d lever(const Vec2& p) { return {1.0, p.y(), -p.x()}; }

struct Forces {
  double push = 0.0;
  double grip = 0.0;
  double tension = 0.0;
  Eigen::Vector3d generalized = Eigen::Vector3d::Zero();
};

}  // namespace

Trace simulate_lift(const PlateModel& plate, const TargetForces& targets, double suction_max,
                    const LifterProfile& profile, const ControllerParams& controller, const PlantParams& plant,
                    double duration, double gravity) {
  plate.validate();
  controller.validate();
  plant.validate();
  profile.validate();
  if (!(duration > 0.0)) throw std::invalid_argument("simulation duration must be positive");

  Trace trace;
  trace.mass = plate.mass;
  trace.gravity = gravity;
  trace.vacuum_limit = suction_max;
  trace.targets = targets;
  const double mg = plate.mass * gravity;
  const double redline = std::max(0.0, mg - suction_max);

  // Equilibrium at the targets; the pad spring carries the rest of the
  // weight and the rotational springs take the residual moment.
  const double push0 = targets.has_push ? targets.push : 0.0;
  const double grip0 = targets.has_grip ? targets.grip : 0.0;
  const double tension0 = mg - push0 - grip0;
  if (tension0 < -1e-9) throw LiftError("hands carry more than the weight; the pad would push");
  const Vec3 inertia(plate.mass, plate.mass * (plate.width * plate.width + plate.height * plate.height) / 12.0,
                     plate.mass * (plate.length * plate.length + plate.height * plate.height) / 12.0);
  const Eigen::Vector3d preload = -(push0 * lever(targets.push_point) + grip0 * lever(targets.grip_point) +
                                    tension0 * lever(targets.suction_point) - Eigen::Vector3d(mg, 0, 0));
  // unilateral push: the stick only presses along its normal
  const double push_sign = push0 >= 0.0 ? 1.0 : -1.0;

  Body body;
  double lifter = 0.0, hands = 0.0;
  double lifter_v = 0.0, hands_v = 0.0;

  auto forces = [&]() {
    Forces f;
    const double zs = lever(targets.suction_point).dot(body.q), vs = lever(targets.suction_point).dot(body.v);
    f.tension = std::max(0.0, tension0 + plant.suction_stiffness * (lifter - zs) +
                                  plant.suction_damping * (lifter_v - vs));
    if (targets.has_push) {
      const double zp = lever(targets.push_point).dot(body.q), vp = lever(targets.push_point).dot(body.v);
      const double press = push_sign * (push0 + plant.hand_stiffness * (hands - zp) + plant.hand_damping * (hands_v - vp));
      f.push = push_sign * std::max(0.0, press);
    }
    if (targets.has_grip) {
      const double zg = lever(targets.grip_point).dot(body.q), vg = lever(targets.grip_point).dot(body.v);
      f.grip = grip0 + plant.hand_stiffness * (hands - zg) + plant.hand_damping * (hands_v - vg);
    }
    f.generalized = f.push * lever(targets.push_point) + f.grip * lever(targets.grip_point) +
                    f.tension * lever(targets.suction_point) - Eigen::Vector3d(mg, 0, 0) + preload;
    f.generalized.tail<2>() -= plant.pad_rot_stiffness * body.q.tail<2>() + plant.pad_rot_damping * body.v.tail<2>();
    return f;
  };

  std::mt19937_64 noise_rng(plant.noise_seed);
  std::normal_distribution<double> noise(0.0, plant.sensor_noise);

  const auto schedule = profile.expanded();
  std::size_t seg = 0;
  double seg_end = schedule.empty() ? 0.0 : schedule[0].duration;
  auto lifter_speed = [&](double t) {
    while (seg < schedule.size() && t >= seg_end - 1e-12) {
      ++seg;
      if (seg < schedule.size()) seg_end += schedule[seg].duration;
    }
    return seg < schedule.size() ? schedule[seg].speed : 0.0;
  };

  ControllerState ctrl;
  ctrl.V = controller.V_d;
  if (controller.velocity_floor) ctrl.V = std::max(ctrl.V, *controller.velocity_floor);
  const int substeps = std::max(1, static_cast<int>(std::lround(controller.dt / plant.substep)));
  const double h = controller.dt / substeps;
  const long steps = static_cast<long>(std::ceil(duration / controller.dt - 1e-9));

  auto record = [&](double t, const Forces& f, double V) {
    trace.rows.push_back({t, f.push, f.grip, f.push + f.grip, V, lifter, f.tension, redline});
  };
  record(0.0, forces(), ctrl.V);

  std::vector<double> still_ends;
  {
    double t = 0.0;
    for (const auto& s : schedule) {
      t += s.duration;
      if (s.speed == 0.0) still_ends.push_back(t);
    }
  }
  std::size_t next_still = 0;
  const bool tracked = targets.has_push || targets.has_grip;

  double over = 0.0;
  for (long k = 0; k < steps; ++k) {
    const double t0 = k * controller.dt;
    const Forces now = forces();
    double measured = targets.has_push ? now.push : now.grip;
    if (plant.sensor_noise > 0.0) measured += noise(noise_rng);
    const double goal = targets.has_push ? push0 : grip0;
    const double E = (targets.has_push || targets.has_grip) ? goal - measured : 0.0;
    const auto out = controller_step(ctrl, E, controller);
    ctrl = out.state;
    hands_v = (targets.has_push || targets.has_grip) ? out.V_out : 0.0;

    Forces f;
    for (int s = 0; s < substeps; ++s) {
      const double t = t0 + s * h;
      lifter_v = lifter_speed(t);
      lifter += h * lifter_v;
      hands += h * hands_v;
      f = forces();
      body.v += h * f.generalized.cwiseQuotient(inertia);
      body.q += h * body.v;
      if (f.tension > suction_max) {
        over += h;
        if (over > plant.transient_window) {
          trace.detached = true;
          trace.detach_time = t + h;
          char buf[160];
          std::snprintf(buf, sizeof buf, "suction pad detached at t=%.3f s (tension %.2f N above limit %.2f N for %.3f s)",
                        trace.detach_time, f.tension, suction_max, over);
          trace.message = buf;
          break;
        }
      } else {
        over = 0.0;
      }
    }
    f = forces();
    const double t1 = t0 + controller.dt;
    record(t1, f, out.V_out);
    if (trace.detached) break;
    while (next_still < still_ends.size() && t1 >= still_ends[next_still] - 1e-9) {
      if (tracked) {
        const double F = targets.has_push ? f.push : f.grip;
        const double goal = targets.has_push ? push0 : grip0;
        trace.steady_checks.push_back({t1, F, goal, std::abs(F - goal) <= controller.force_band});
      }
      ++next_still;
    }
  }
  if (!trace.detached) trace.message = "ok";
  return trace;
}

Trace simulate_lift(const MsgNode& terminal, const PlateModel& plate, const SuctionConfig& suction,
                    const LifterProfile& profile, const ControllerParams& controller, const PlantParams& plant,
                    double duration) {
  return simulate_lift(plate, target_forces(terminal), suction.max_force, profile, controller, plant, duration,
                       terminal.system.gravity);
}

std::string trace_to_csv(const Trace& trace) {
  std::ostringstream os;
  os << "time,F_push,F_grip,F_sum,V_out,lifter_height,pad_tension,red_line\n";
  char buf[256];
  for (const auto& r : trace.rows) {
    std::snprintf(buf, sizeof buf, "%.3f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", r.time, r.F_push, r.F_grip, r.F_sum,
                  r.V_out, r.lifter_height, r.pad_tension, r.red_line);
    os << buf;
  }
  return os.str();
}

json trace_events_json(const Trace& trace) {
  json j = {{"status", trace.detached ? "detached" : "ok"}, {"message", trace.message}, {"events", json::array()}};
  if (trace.detached)
    j["events"].push_back({{"type", "suction_detachment"}, {"time_s", trace.detach_time}, {"vacuum_limit_n", trace.vacuum_limit}});
  json checks = json::array();
  for (const auto& c : trace.steady_checks)
    checks.push_back({{"time_s", c.time}, {"force_n", c.force}, {"goal_n", c.goal}, {"within_band", c.within_band}});
  j["steady_checks"] = checks;
  return j;
}

}  // namespace platelift
