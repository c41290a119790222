#include "platelift/msg.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <queue>
#include <thread>

namespace platelift {

namespace {

template <typename Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(1, jobs), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  for (auto& t : pool) t.join();
}

DualArmState parked(const DualArm& arms) { return {arms.left.chain.home, arms.right.chain.home}; }

DualArmState with_arm(const DualArm& arms, DualArmState state, HandKind hand, const Joints& q) {
  if (arms.left_holds(hand))
    state.left = q;
  else
    state.right = q;
  return state;
}

const HandPlacement* find_placement(const std::vector<RConf>& rconfs, const std::string& id) {
  for (const auto& r : rconfs) {
    if (r.grip && r.grip->id == id) return &*r.grip;
    if (r.push && r.push->id == id) return &*r.push;
  }
  return nullptr;
}

}  // namespace

GeometryTable examine_geometry(const DCSG& dcsg, const std::vector<RConf>& rconfs, const PlanningContext& ctx,
                               int jobs) {
  GeometryTable table;
  for (const auto& r : rconfs)
    for (const auto* p : {r.grip ? &*r.grip : nullptr, r.push ? &*r.push : nullptr})
      if (p && !table.placement_index.count(p->id)) {
        table.placement_index[p->id] = static_cast<int>(table.placement_ids.size());
        table.placement_ids.push_back(p->id);
      }
  std::vector<const HandPlacement*> placements;
  for (const auto& id : table.placement_ids) placements.push_back(find_placement(rconfs, id));

  const std::size_t nn = dcsg.nodes.size(), np = placements.size();
  table.parked_ok.assign(nn, 0);
  table.solutions.assign(nn, std::vector<std::vector<Joints>>(np));
  const DualArmState home = parked(ctx.arms);

  parallel_for(nn * (np + 1), jobs, [&](std::size_t task) {
    const std::size_t n = task / (np + 1), k = task % (np + 1);
    const Pose& pose = dcsg.nodes[n].pose;
    if (k == np) {
      table.parked_ok[n] = !collides(ctx.arms, home, ctx.plate, pose, {}, ctx.world);
      return;
    }
    const HandPlacement world = to_world(*placements[k], pose);
    const ArmModel& arm = ctx.arms.arm(world.hand);
    IkOptions opts = ctx.ik;
    std::vector<Pose> targets{world.pose};
    if (world.hand == HandKind::Grip) {
      // The two fingers are interchangeable.
      targets.push_back(world.pose * Pose::from_axis_angle(Vec3::UnitZ(), kPi));
    } else {
      opts.free_roll = true;
    }
    auto& out = table.solutions[n][k];
    for (const auto& target : targets)
      for (const auto& q : ik_solutions(arm.chain, target, opts)) {
        if (static_cast<int>(out.size()) >= ctx.max_ik_solutions) return;
        const DualArmState state = with_arm(ctx.arms, home, world.hand, q);
        if (!collides(ctx.arms, state, ctx.plate, pose, {world}, ctx.world)) out.push_back(q);
      }
  });
  return table;
}

Joints arm_torque(const ArmModel& arm, const Joints& q, const ForceSystem& system, const ForceSolution& solution,
                  const Vec3& com) {
  const ContactKind kind = arm.hand == HandKind::Grip ? ContactKind::GripFinger : ContactKind::Push;
  const Vec3 tcp = fk(arm.chain, q).translation;
  const Vec6 w = resultant_wrench(system, solution, kind, com, tcp);
  return jacobian(arm.chain, q).transpose() * w;
}

DcsgRv build_dcsg_rv(const DCSG& dcsg, const std::vector<RConf>& rconfs, int rconf_id, const PlanningContext& ctx,
                     const GeometryTable& geometry) {
  const RConf& rconf = rconfs.at(static_cast<std::size_t>(rconf_id));
  DcsgRv rv;
  rv.rconf = rconf_id;
  const DualArmState home = parked(ctx.arms);
  const ForceLimits limits{ctx.physics.hand_payload, ctx.suction.max_force};
  std::vector<char> kept(dcsg.nodes.size(), 0);

  for (const auto& node : dcsg.nodes) {
    const int n = node.id;
    const auto world = to_world(rconf, node.pose);
    std::optional<DualArmState> state;
    if (rconf.empty()) {
      if (geometry.parked_ok[n]) state = home;
    } else if (rconf.size() == 1) {
      const auto& pl = rconf.grip ? *rconf.grip : *rconf.push;
      const auto& sols = geometry.solutions[n][geometry.placement_index.at(pl.id)];
      if (!sols.empty()) state = with_arm(ctx.arms, home, pl.hand, sols.front());
    } else {
      const auto& gs = geometry.solutions[n][geometry.placement_index.at(rconf.grip->id)];
      const auto& ps = geometry.solutions[n][geometry.placement_index.at(rconf.push->id)];
      for (std::size_t i = 0; i < gs.size() && !state; ++i)
        for (std::size_t j = 0; j < ps.size() && !state; ++j) {
          const DualArmState s = with_arm(ctx.arms, with_arm(ctx.arms, home, HandKind::Grip, gs[i]), HandKind::Push, ps[j]);
          if (!collides(ctx.arms, s, ctx.plate, node.pose, world, ctx.world)) state = s;
        }
    }
    if (!state) {
      ++rv.geometric_rejects;
      continue;
    }
    RvNode rn;
    rn.dcsg_node = n;
    rn.joints = *state;
    rn.system = node_system(ctx.plate, node.pose, node.pc, world, &ctx.suction, ctx.physics);
    rn.forces = solve_socp(rn.system, ctx.physics.weights, limits);
    if (!rn.forces.feasible() || !verify_solution(rn.system, rn.forces, limits).ok(1e-6)) {
      ++rv.physical_rejects;
      continue;
    }
    const Vec3 com = center_of_mass(ctx.plate, node.pose);
    rn.torque_left = arm_torque(ctx.arms.left, state->left, rn.system, rn.forces, com);
    rn.torque_right = arm_torque(ctx.arms.right, state->right, rn.system, rn.forces, com);
    rn.torque_sum = rn.torque_left.cwiseAbs().sum() + rn.torque_right.cwiseAbs().sum();
    kept[n] = 1;
    rv.nodes.push_back(std::move(rn));
  }
  for (std::size_t e = 0; e < dcsg.edges.size(); ++e)
    if (kept[dcsg.edges[e].a] && kept[dcsg.edges[e].b]) rv.dcsg_edges.push_back(static_cast<int>(e));
  return rv;
}

DcsgRv build_dcsg_rv(const DCSG& dcsg, const RConf& rconf, const PlanningContext& ctx) {
  const std::vector<RConf> one{rconf};
  return build_dcsg_rv(dcsg, one, 0, ctx, examine_geometry(dcsg, one, ctx));
}

std::vector<DcsgRv> build_all_rvs(const DCSG& dcsg, const std::vector<RConf>& rconfs, const PlanningContext& ctx,
                                  const GeometryTable& geometry, int jobs) {
  std::vector<DcsgRv> rvs(rconfs.size());
  parallel_for(rconfs.size(), jobs,
               [&](std::size_t r) { rvs[r] = build_dcsg_rv(dcsg, rconfs, static_cast<int>(r), ctx, geometry); });
  return rvs;
}

int restraint_rank(const std::vector<EnvironmentPoint>& contacts) {
  if (contacts.empty()) return 0;
  Eigen::MatrixXd T(contacts.size(), 6);
  for (std::size_t i = 0; i < contacts.size(); ++i) {
    const Vec3 n = contacts[i].normal;
    T.row(i) << n.transpose(), contacts[i].position.cross(n).transpose();
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(T);
  const auto& sv = svd.singularValues();
  const double tol = 1e-9 * std::max(1.0, sv.size() ? sv[0] : 0.0);
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) rank += sv[i] > tol ? 1 : 0;
  return rank;
}

int restraint_rank(const PlateModel& plate, const Pose& pose, const PrincipalContact& pc) {
  std::vector<EnvironmentPoint> pts;
  const Vec3 com = center_of_mass(plate, pose);
  for (const auto& p : contact_points(plate, pose, pc)) pts.push_back({p - com, Vec3::UnitZ()});
  return restraint_rank(pts);
}

void EdgeCostParams::validate() const {
  if (!(k > 0.0)) throw std::invalid_argument("edge cost constant k must be positive");
  if (!(omega > 0.0)) throw std::invalid_argument("edge cost weight omega must be positive");
}

std::string to_string(EdgeKind kind) { return kind == EdgeKind::Transfer ? "transfer" : "transit"; }

std::size_t MSG::transfer_count() const {
  return static_cast<std::size_t>(
      std::count_if(edges.begin(), edges.end(), [](const MsgEdge& e) { return e.kind == EdgeKind::Transfer; }));
}

std::size_t MSG::transit_count() const { return edges.size() - transfer_count(); }

double edge_cost(const MsgNode& from, const MsgNode& to, const EdgeCostParams& params) {
  if (from.rconf != to.rconf) return from.torque_sum + to.torque_sum;
  if (from.pc == to.pc) return params.k;
  return params.omega * std::exp(-static_cast<double>(from.restraint - to.restraint));
}

MSG merge_msg(const DCSG& dcsg, const std::vector<RConf>& rconfs, const std::vector<DcsgRv>& rvs,
              const EdgeCostParams& params) {
  params.validate();
  MSG msg;
  std::vector<std::vector<int>> at_node(dcsg.nodes.size());
  std::vector<std::map<int, int>> id_of(rvs.size());
  for (std::size_t r = 0; r < rvs.size(); ++r) {
    for (const auto& rn : rvs[r].nodes) {
      MsgNode m;
      m.id = static_cast<int>(msg.nodes.size());
      m.dcsg_node = rn.dcsg_node;
      m.rconf = rvs[r].rconf;
      const auto& dn = dcsg.nodes[rn.dcsg_node];
      m.pc = dn.pc;
      m.joints = rn.joints;
      m.system = rn.system;
      m.forces = rn.forces;
      m.torque_left = rn.torque_left;
      m.torque_right = rn.torque_right;
      m.torque_sum = rn.torque_sum;
      id_of[r][rn.dcsg_node] = m.id;
      at_node[rn.dcsg_node].push_back(m.id);
      msg.nodes.push_back(std::move(m));
    }
  }
  // Restraint from the environment contacts already in each node's system.
  for (auto& m : msg.nodes) {
    std::vector<EnvironmentPoint> pts;
    for (const auto& c : m.system.contacts)
      if (c.kind == ContactKind::Environment) pts.push_back({c.frame.translation, c.frame.rotation.col(2)});
    m.restraint = restraint_rank(pts);
  }
  auto add_edge = [&](int a, int b, EdgeKind kind) {
    MsgEdge e{a, b, kind, edge_cost(msg.nodes[a], msg.nodes[b], params), edge_cost(msg.nodes[b], msg.nodes[a], params)};
    msg.edges.push_back(e);
  };
  for (std::size_t r = 0; r < rvs.size(); ++r)
    for (int e : rvs[r].dcsg_edges) {
      const auto& de = dcsg.edges[e];
      add_edge(id_of[r].at(de.a), id_of[r].at(de.b), EdgeKind::Transfer);
    }
  for (const auto& ids : at_node)
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (std::size_t j = i + 1; j < ids.size(); ++j) {
        const RConf& ra = rconfs[msg.nodes[ids[i]].rconf];
        const RConf& rb = rconfs[msg.nodes[ids[j]].rconf];
        if (rconf_subset(ra, rb) || rconf_subset(rb, ra)) add_edge(ids[i], ids[j], EdgeKind::Transit);
      }
  msg.adjacency.assign(msg.nodes.size(), {});
  for (std::size_t e = 0; e < msg.edges.size(); ++e) {
    msg.adjacency[msg.edges[e].a].push_back({msg.edges[e].b, static_cast<int>(e)});
    msg.adjacency[msg.edges[e].b].push_back({msg.edges[e].a, static_cast<int>(e)});
  }
  return msg;
}

WeightedDigraph to_digraph(const MSG& msg) {
  WeightedDigraph g;
  g.out.assign(msg.nodes.size(), {});
  for (const auto& e : msg.edges) {
    g.add_arc(e.a, e.b, e.cost_ab);
    g.add_arc(e.b, e.a, e.cost_ba);
  }
  return g;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Tree {
  std::vector<double> dist;
  std::vector<int> pred;
  std::vector<double> pred_cost;
};

// Dijkstra from `source`; with a heuristic, A* that stops at the first goal
// settled (returned), otherwise runs until every goal is settled.
int shortest_tree(const WeightedDigraph& g, int source, const std::vector<char>& is_goal, std::size_t goal_count,
                  const std::function<double(int)>& h, Tree& t) {
  const int n = g.size();
  t.dist.assign(n, kInf);
  t.pred.assign(n, -1);
  t.pred_cost.assign(n, 0.0);
  std::vector<char> done(n, 0);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  t.dist[source] = 0.0;
  pq.push({h ? h(source) : 0.0, source});
  std::size_t settled_goals = 0;
  while (!pq.empty()) {
    const auto [f, u] = pq.top();
    pq.pop();
    if (done[u]) continue;
    done[u] = 1;
    if (is_goal[u]) {
      if (h) return u;
      if (++settled_goals == goal_count) break;
    }
    for (const auto& [v, w] : g.out[u]) {
      const double nd = t.dist[u] + w;
      if (nd < t.dist[v]) {
        t.dist[v] = nd;
        t.pred[v] = u;
        t.pred_cost[v] = w;
        pq.push({nd + (h ? h(v) : 0.0), v});
      }
    }
  }
  return -1;
}

}  // namespace

PathResult multi_search(const WeightedDigraph& g, const std::vector<int>& starts_in, const std::vector<int>& goals,
                        const std::function<double(int)>& heuristic) {
  PathResult best;
  std::vector<char> is_goal(g.size(), 0);
  for (int v : goals) is_goal.at(v) = 1;
  const std::size_t goal_count = static_cast<std::size_t>(std::count(is_goal.begin(), is_goal.end(), 1));
  std::vector<int> starts = starts_in;
  std::sort(starts.begin(), starts.end());
  starts.erase(std::unique(starts.begin(), starts.end()), starts.end());
  Tree t;
  for (int s : starts) {
    ++best.starts_searched;
    int goal = -1;
    if (heuristic) {
      goal = shortest_tree(g, s, is_goal, goal_count, heuristic, t);
      if (goal >= 0) ++best.goals_reached;
    } else {
      shortest_tree(g, s, is_goal, goal_count, {}, t);
      // pathlist_j: every reachable goal; minpath_j: the cheapest.
      for (int v = 0; v < g.size(); ++v) {
        if (!is_goal[v] || t.dist[v] == kInf) continue;
        ++best.goals_reached;
        if (goal < 0 || t.dist[v] < t.dist[goal]) goal = v;
      }
    }
    if (goal < 0) continue;
    if (best.found && !(t.dist[goal] < best.cost)) continue;
    best.found = true;
    best.cost = t.dist[goal];
    best.start = s;
    best.goal = goal;
    best.nodes.clear();
    best.edge_costs.clear();
    for (int v = goal; v != -1; v = t.pred[v]) {
      best.nodes.push_back(v);
      if (t.pred[v] != -1) best.edge_costs.push_back(t.pred_cost[v]);
    }
    std::reverse(best.nodes.begin(), best.nodes.end());
    std::reverse(best.edge_costs.begin(), best.edge_costs.end());
  }
  return best;
}

double relaxation_heuristic(int restraint, const EdgeCostParams& params) {
  return restraint <= 0 ? 0.0 : params.omega * std::exp(-static_cast<double>(restraint));
}

PathResult search(const MSG& msg, int start_node, const PrincipalContact& goal, const EdgeCostParams& params,
                  const SearchOptions& options) {
  std::vector<int> starts, goals;
  for (const auto& n : msg.nodes) {
    if (n.dcsg_node == start_node) starts.push_back(n.id);
    if (n.pc == goal) goals.push_back(n.id);
  }
  if (starts.empty())
    throw SearchSetError("no manipulation state matches the initial plate state (DCSG node " +
                         std::to_string(start_node) + ")");
  if (goals.empty()) throw SearchSetError("no manipulation state matches the goal state " + goal.label());
  std::function<double(int)> h;
  if (options.use_heuristic && goal.is_none())
    h = [&](int v) { return relaxation_heuristic(msg.nodes[v].restraint, params); };
  return multi_search(to_digraph(msg), starts, goals, h);
}

}  // namespace platelift
