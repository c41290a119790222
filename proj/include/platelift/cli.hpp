#pragma once

#include "platelift/contact_graph.hpp"
#include "platelift/grasp_db.hpp"
#include "platelift/kinematics.hpp"
#include "platelift/liftsim.hpp"
#include "platelift/msg.hpp"
#include "platelift/statics.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace platelift {

enum ExitCode { kExitOk = 0, kExitNoPath = 1, kExitInvalid = 2 };

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Scenario {
  std::string name;
  std::string path;
  PlateModel plate;
  Pose initial_pose;
  SupportPlane support;
  CollisionWorld world;
  SuctionConfig suction;
  DualArm arms;
  std::string grasp_db_path;
  PhysicsParams physics;
  EdgeCostParams cost;
  SamplingParams sampling;
  IkOptions ik;
  int max_ik_solutions = 4;
  ControllerParams controller;
  PlantParams plant;
  LifterProfile profile;
  double sim_duration = 10.0;
};

/// Reads a scenario file; relative paths resolve against its directory.
/// Throws ScenarioError (or InvalidPoseError) on any invalid content.
Scenario load_scenario(const std::string& path);

nlohmann::json plate_to_json(const PlateModel& plate);
PlateModel plate_from_json(const nlohmann::json& j);

/// Every stage of the planner, kept for stats and tests.
struct PlannerGraph {
  ContactStateGraph csg;
  DCSG dcsg;
  std::vector<RConf> rconfs;
  GeometryTable geometry;
  std::vector<DcsgRv> rvs;
  MSG msg;
  int start_node = -1;
  double t_dcsg = 0.0, t_geometry = 0.0, t_physics = 0.0, t_merge = 0.0;
};

PlannerGraph build_planner(const Scenario& scenario, int jobs = 1);

struct PlanOutcome {
  int exit_code = kExitOk;
  std::string message;
  nlohmann::json plan;   // deterministic
  nlohmann::json stats;  // includes timings
};

PlanOutcome run_plan(const Scenario& scenario, const PrincipalContact& goal, int jobs = 1);
/// Plan on an already built graph.
PlanOutcome plan_on_graph(const Scenario& scenario, const PlannerGraph& graph, const PrincipalContact& goal);

struct VerifyCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Rechecks every node's statics, each edge's legality and cost, and the total.
std::vector<VerifyCheck> verify_plan(const nlohmann::json& plan);

/// Terminal node of a plan reassembled for the lift simulation.
MsgNode terminal_node(const nlohmann::json& plan);

/// "default", "zero" or a profile JSON file. The seed replaces the jitter seed.
LifterProfile resolve_profile(const std::string& spec, const nlohmann::json& plan, std::optional<std::uint64_t> seed);

Trace simulate_plan(const nlohmann::json& plan, const LifterProfile& profile, std::optional<std::uint64_t> seed);

nlohmann::json graph_stats(const Scenario& scenario, const PlannerGraph& graph);

// Subcommands; each returns the process exit code and reports on `out`/`err`.
int cmd_plan(const std::string& scenario_path, const std::string& goal, const std::string& out_dir,
             std::optional<unsigned> seed, int jobs, std::ostream& out, std::ostream& err);
int cmd_simulate(const std::string& plan_path, const std::string& profile, const std::string& out_dir,
                 std::optional<std::uint64_t> seed, std::ostream& out, std::ostream& err);
int cmd_verify(const std::string& plan_path, std::ostream& out, std::ostream& err);
int cmd_graph_stats(const std::string& scenario_path, const std::string& out_dir, int jobs, std::ostream& out,
                    std::ostream& err);
int cmd_gen_grasps(const std::string& scenario_path, const std::string& out_path, std::ostream& out,
                   std::ostream& err);

}  // namespace platelift
