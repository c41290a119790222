#pragma once

#include "platelift/contact_graph.hpp"
#include "platelift/grasp_db.hpp"
#include "platelift/kinematics.hpp"
#include "platelift/statics.hpp"

#include <json.hpp>

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace platelift {

/// Everything the feasibility checks need besides the graph and the R-Conf.
struct PlanningContext {
  PlateModel plate;
  SuctionConfig suction;
  DualArm arms;
  CollisionWorld world;
  PhysicsParams physics;
  IkOptions ik;
  /// Keep at most this many collision-free IK solutions per (node, placement).
  int max_ik_solutions = 4;
};

/// Per DCSG node: is the parked dual-arm state collision-free, and the
/// collision-free IK solutions of every placement (other arm parked).
struct GeometryTable {
  std::vector<std::string> placement_ids;
  std::map<std::string, int> placement_index;
  std::vector<char> parked_ok;                           // [node]
  std::vector<std::vector<std::vector<Joints>>> solutions;  // [node][placement]
};

/// IK and collision examination of all placements at all nodes. Runs
/// `jobs` worker threads; the result does not depend on `jobs`.
GeometryTable examine_geometry(const DCSG& dcsg, const std::vector<RConf>& rconfs, const PlanningContext& ctx,
                               int jobs = 1);

struct RvNode {
  int dcsg_node = 0;
  DualArmState joints;
  ForceSystem system;
  ForceSolution forces;
  Joints torque_left = Joints::Zero();
  Joints torque_right = Joints::Zero();
  double torque_sum = 0.0;  // sum of |tau| over both arms
};

/// A DCSG filtered for one R-Conf: surviving nodes and the induced edges.
struct DcsgRv {
  int rconf = 0;
  std::vector<RvNode> nodes;          // in DCSG node order
  std::vector<int> dcsg_edges;        // indices into dcsg.edges
  std::size_t geometric_rejects = 0;  // failed IK or collision
  std::size_t physical_rejects = 0;   // SOCP infeasible
};

DcsgRv build_dcsg_rv(const DCSG& dcsg, const std::vector<RConf>& rconfs, int rconf, const PlanningContext& ctx,
                     const GeometryTable& geometry);
/// Convenience overload that examines the geometry of this R-Conf only.
DcsgRv build_dcsg_rv(const DCSG& dcsg, const RConf& rconf, const PlanningContext& ctx);

std::vector<DcsgRv> build_all_rvs(const DCSG& dcsg, const std::vector<RConf>& rconfs, const PlanningContext& ctx,
                                  const GeometryTable& geometry, int jobs = 1);

/// Joint torques tau = J' W of one arm, W the resultant wrench of its
/// hand contacts taken at the TCP.
Joints arm_torque(const ArmModel& arm, const Joints& q, const ForceSystem& system, const ForceSolution& solution,
                  const Vec3& com);

struct EnvironmentPoint {
  Vec3 position = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
};

/// Numerical rank of the matrix with rows (n', (r x n)').
int restraint_rank(const std::vector<EnvironmentPoint>& contacts);
int restraint_rank(const PlateModel& plate, const Pose& pose, const PrincipalContact& pc);

struct EdgeCostParams {
  double k = 1.0;
  double omega = 1.0;

  void validate() const;
};

enum class EdgeKind { Transfer, Transit };

std::string to_string(EdgeKind kind);

struct MsgNode {
  int id = 0;
  int dcsg_node = 0;
  int rconf = 0;
  PrincipalContact pc;
  int restraint = 0;
  DualArmState joints;
  ForceSystem system;
  ForceSolution forces;
  Joints torque_left = Joints::Zero();
  Joints torque_right = Joints::Zero();
  double torque_sum = 0.0;
};

struct MsgEdge {
  int a = 0;
  int b = 0;
  EdgeKind kind = EdgeKind::Transfer;
  double cost_ab = 0.0;
  double cost_ba = 0.0;
};

struct MSG {
  std::vector<MsgNode> nodes;
  std::vector<MsgEdge> edges;
  std::vector<std::vector<std::pair<int, int>>> adjacency;  // (neighbour, edge index)

  std::size_t transfer_count() const;
  std::size_t transit_count() const;
};

/// Directed cost of moving from `from` to `to` (the three rules: constant
/// within a PC, exp of the restraint change across PCs, torque sum for a regrasp).
double edge_cost(const MsgNode& from, const MsgNode& to, const EdgeCostParams& params);

MSG merge_msg(const DCSG& dcsg, const std::vector<RConf>& rconfs, const std::vector<DcsgRv>& rvs,
              const EdgeCostParams& params);

/// Directed graph with non-negative arc costs.
struct WeightedDigraph {
  std::vector<std::vector<std::pair<int, double>>> out;

  int size() const { return static_cast<int>(out.size()); }
  void add_arc(int from, int to, double cost) { out[from].push_back({to, cost}); }
};

WeightedDigraph to_digraph(const MSG& msg);

struct PathResult {
  bool found = false;
  std::vector<int> nodes;
  std::vector<double> edge_costs;
  double cost = 0.0;
  int start = -1;
  int goal = -1;
  std::size_t starts_searched = 0;
  std::size_t goals_reached = 0;  // over all starts
};

/// Multi-start, multi-goal routine: for every start the shortest path to
/// every reachable goal, the cheapest per start, then the cheapest over all
/// starts. Ties go to the lowest goal id, then the lowest start id. With a
/// heuristic (must be consistent) each start runs A* to the nearest goal.
PathResult multi_search(const WeightedDigraph& graph, const std::vector<int>& starts, const std::vector<int>& goals,
                        const std::function<double(int)>& heuristic = {});

class SearchSetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SearchOptions {
  bool use_heuristic = false;
};

/// Starts: MSG nodes on DCSG node `start_node`. Goals: MSG nodes whose PC
/// equals `goal`. Throws SearchSetError naming the empty set.
PathResult search(const MSG& msg, int start_node, const PrincipalContact& goal, const EdgeCostParams& params,
                  const SearchOptions& options = {});

/// Consistent lower bound on the remaining cost to a No-Contact goal.
double relaxation_heuristic(int restraint, const EdgeCostParams& params);

}  // namespace platelift
