#include "platelift/cli.hpp"

#include "platelift/json_io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <queue>
#include <sstream>

namespace platelift {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string resolve(const fs::path& base, const std::string& p) {
  const fs::path q(p);
  return (q.is_absolute() ? q : base / q).lexically_normal().string();
}

GraspGeneratorParams generator_from_json(const json& j) {
  GraspGeneratorParams g;
  g.spacing = j.value("spacing_m", g.spacing);
  g.grip_inset = j.value("grip_inset_m", g.grip_inset);
  g.push_inset = j.value("push_inset_m", g.push_inset);
  g.push_tilt_deg = j.value("push_tilt_deg", g.push_tilt_deg);
  g.top_pushes = j.value("top_pushes", g.top_pushes);
  g.bottom_pushes = j.value("bottom_pushes", g.bottom_pushes);
  g.combinations = j.value("combinations", g.combinations);
  return g;
}

ContactKind contact_kind_from(const std::string& s) {
  if (s == "grip") return ContactKind::GripFinger;
  if (s == "push") return ContactKind::Push;
  if (s == "environment") return ContactKind::Environment;
  if (s == "suction") return ContactKind::Suction;
  throw std::invalid_argument("unknown contact kind '" + s + "'");
}

std::string contact_kind_name(ContactKind k) {
  switch (k) {
    case ContactKind::GripFinger: return "grip";
    case ContactKind::Push: return "push";
    case ContactKind::Environment: return "environment";
    case ContactKind::Suction: return "suction";
  }
  return "?";
}

json joints_json(const Joints& q) {
  json a = json::array();
  for (int i = 0; i < 6; ++i) a.push_back(q[i]);
  return a;
}

Joints joints_from(const json& j) {
  if (!j.is_array() || j.size() != 6) throw std::invalid_argument("joint vector needs 6 entries");
  Joints q;
  for (int i = 0; i < 6; ++i) q[i] = j[i].get<double>();
  return q;
}

Vec6 vec6_from(const json& j) {
  if (!j.is_array() || j.size() != 6) throw std::invalid_argument("wrench needs 6 entries");
  Vec6 v;
  for (int i = 0; i < 6; ++i) v[i] = j[i].get<double>();
  return v;
}

json rconf_json(const RConf& r) {
  json j = json::array();
  if (r.grip) j.push_back(placement_to_json(*r.grip));
  if (r.push) j.push_back(placement_to_json(*r.push));
  return j;
}

RConf rconf_from(const json& j) {
  RConf r;
  for (const auto& e : j) {
    auto p = placement_from_json(e);
    if (p.hand == HandKind::Grip)
      r.grip = p;
    else
      r.push = p;
  }
  return r;
}

json node_json(const MsgNode& n, const DCSG& dcsg, const std::vector<RConf>& rconfs) {
  const auto& dn = dcsg.nodes[n.dcsg_node];
  json contacts = json::array();
  for (std::size_t i = 0; i < n.system.contacts.size(); ++i) {
    const auto& c = n.system.contacts[i];
    contacts.push_back({{"kind", contact_kind_name(c.kind)},
                        {"label", c.label},
                        {"frame", pose_to_json(c.frame)},
                        {"mu", c.mu},
                        {"epsilon_m", c.epsilon},
                        {"pad_radius_m", c.pad_radius},
                        {"kappa_n", c.kappa},
                        {"wrench", vec_to_json(n.forces.wrenches[i])}});
  }
  const RConf& r = rconfs[n.rconf];
  return {{"msg_id", n.id},
          {"dcsg_node", n.dcsg_node},
          {"pc", n.pc.label()},
          {"restraint", n.restraint},
          {"pose", pose_to_json(dn.pose)},
          {"rconf", r.label()},
          {"placements", rconf_json(r)},
          {"joints", {{"left", joints_json(n.joints.left)}, {"right", joints_json(n.joints.right)}}},
          {"contacts", contacts},
          {"f_gp_plus", n.forces.f_gp_plus},
          {"f_s_plus", n.forces.f_s_plus},
          {"objective", n.forces.objective},
          {"torques", {{"left", joints_json(n.torque_left)}, {"right", joints_json(n.torque_right)}}},
          {"torque_sum", n.torque_sum}};
}

// Reassembles a plan node far enough for statics, costs and the lift.
struct PlanNode {
  MsgNode node;
  Pose pose;
  RConf rconf;
  std::string rconf_label;
};

PlanNode plan_node_from(const json& j, const PlateModel& plate, double gravity) {
  PlanNode p;
  p.node.id = j.at("msg_id").get<int>();
  p.node.dcsg_node = j.at("dcsg_node").get<int>();
  p.node.pc = PrincipalContact::parse(j.at("pc").get<std::string>());
  p.node.restraint = j.at("restraint").get<int>();
  p.pose = pose_from_json(j.at("pose"));
  p.rconf = rconf_from(j.at("placements"));
  p.rconf_label = j.at("rconf").get<std::string>();
  p.node.joints.left = joints_from(j.at("joints").at("left"));
  p.node.joints.right = joints_from(j.at("joints").at("right"));
  std::vector<ContactSpec> specs;
  for (const auto& c : j.at("contacts")) {
    ContactSpec s;
    s.kind = contact_kind_from(c.at("kind").get<std::string>());
    s.label = c.at("label").get<std::string>();
    s.frame = pose_from_json(c.at("frame"));
    s.mu = c.at("mu").get<double>();
    s.epsilon = c.at("epsilon_m").get<double>();
    s.pad_radius = c.at("pad_radius_m").get<double>();
    s.kappa = c.at("kappa_n").get<double>();
    specs.push_back(s);
    p.node.forces.wrenches.push_back(vec6_from(c.at("wrench")));
  }
  p.node.system = assemble_system(plate, specs, gravity);
  p.node.forces.status = SolverStatus::Optimal;
  p.node.forces.f_gp_plus = j.at("f_gp_plus").get<double>();
  p.node.forces.f_s_plus = j.at("f_s_plus").get<double>();
  p.node.forces.objective = j.at("objective").get<double>();
  p.node.torque_left = joints_from(j.at("torques").at("left"));
  p.node.torque_right = joints_from(j.at("torques").at("right"));
  p.node.torque_sum = j.at("torque_sum").get<double>();
  return p;
}

int count_pc_changes(const std::vector<PrincipalContact>& pcs) {
  int c = 0;
  for (std::size_t i = 1; i < pcs.size(); ++i) c += pcs[i] == pcs[i - 1] ? 0 : 1;
  return c;
}

// PCs reachable from the start nodes, least restrained first.
std::vector<const MsgNode*> reachable_frontier(const MSG& msg, int start_node) {
  std::vector<char> seen(msg.nodes.size(), 0);
  std::queue<int> q;
  for (const auto& n : msg.nodes)
    if (n.dcsg_node == start_node) seen[n.id] = 1, q.push(n.id);
  while (!q.empty()) {
    const int v = q.front();
    q.pop();
    for (const auto& [w, e] : msg.adjacency[v])
      if (!seen[w]) seen[w] = 1, q.push(w);
  }
  std::vector<const MsgNode*> out;
  for (const auto& n : msg.nodes)
    if (seen[n.id]) out.push_back(&n);
  std::stable_sort(out.begin(), out.end(), [](const MsgNode* a, const MsgNode* b) { return a->restraint < b->restraint; });
  return out;
}

json world_to_json(const CollisionWorld& w) {
  json obs = json::array();
  for (const auto& b : w.obstacles) obs.push_back({{"pose", pose_to_json(b.pose)}, {"half_extents_m", vec_to_json(b.half)}});
  return {{"table_height_m", w.table_height}, {"obstacles", obs}, {"contact_exemption_m", w.contact_exemption}};
}

void write_json(const fs::path& p, const json& j) { write_text_file(p.string(), j.dump(2) + "\n"); }

}  // namespace

json plate_to_json(const PlateModel& plate) {
  return {{"length_m", plate.length},
          {"width_m", plate.width},
          {"thickness_m", plate.height},
          {"mass_kg", plate.mass},
          {"com_offset_m", vec_to_json(plate.com_offset)}};
}

PlateModel plate_from_json(const json& j) {
  PlateModel p;
  p.length = j.at("length_m").get<double>();
  p.width = j.at("width_m").get<double>();
  p.height = j.at("thickness_m").get<double>();
  p.mass = j.at("mass_kg").get<double>();
  if (j.contains("com_offset_m")) p.com_offset = vec3_from_json(j.at("com_offset_m"));
  p.validate();
  return p;
}

Scenario load_scenario(const std::string& path) {
  const json j = read_json_file(path);
  const fs::path dir = fs::path(path).parent_path();
  Scenario s;
  s.path = path;
  try {
    s.name = j.value("name", fs::path(path).stem().string());
    s.plate = plate_from_json(j.at("plate"));
    s.initial_pose = pose_from_json(j.at("initial_pose"));
    s.support.height = j.value("support_height_m", 0.0);
    s.world.table_height = j.value("table_height_m", 0.0);
    if (j.contains("obstacles"))
      for (const auto& o : j.at("obstacles"))
        s.world.obstacles.push_back({pose_from_json(o.at("pose")), vec3_from_json(o.at("half_extents_m"))});
    s.suction = j.at("suction").get<SuctionConfig>();
    s.suction.validate(s.plate);

    json arms = j.at("arms");
    if (arms.is_string()) {
      const std::string p = resolve(dir, arms.get<std::string>());
      if (!fs::exists(p)) throw ScenarioError("arm description file not found: " + p);
      arms = read_json_file(p);
    }
    s.arms.left = arm_from_json(arms.at("left"));
    s.arms.right = arm_from_json(arms.at("right"));
    if (s.arms.left.hand == s.arms.right.hand) throw ScenarioError("one arm must grip and the other push");

    if (j.contains("grasp_db")) {
      s.grasp_db_path = resolve(dir, j.at("grasp_db").get<std::string>());
      if (!fs::exists(s.grasp_db_path)) throw ScenarioError("grasp database not found: " + s.grasp_db_path);
    }
    if (j.contains("physics")) s.physics = j.at("physics").get<PhysicsParams>();
    s.physics.validate();
    if (j.contains("cost")) {
      s.cost.k = j.at("cost").value("k", s.cost.k);
      s.cost.omega = j.at("cost").value("omega", s.cost.omega);
    }
    s.cost.validate();
    if (j.contains("sampling")) s.sampling = j.at("sampling").get<SamplingParams>();
    s.sampling.validate();
    if (j.contains("ik")) {
      const auto& k = j.at("ik");
      s.ik.max_iterations = k.value("max_iterations", s.ik.max_iterations);
      s.ik.damping = k.value("damping", s.ik.damping);
      s.ik.perturbed_seeds = k.value("perturbed_seeds", s.ik.perturbed_seeds);
      s.max_ik_solutions = k.value("max_solutions", s.max_ik_solutions);
    }
    const json seeds = j.value("seeds", json::object());
    s.ik.seed = seeds.value("ik", s.ik.seed);
    if (j.contains("controller")) s.controller = j.at("controller").get<ControllerParams>();
    s.controller.validate();
    if (j.contains("plant")) s.plant = j.at("plant").get<PlantParams>();
    s.plant.noise_seed = seeds.value("noise", s.plant.noise_seed);
    s.plant.validate();
    s.profile = j.contains("profile") ? j.at("profile").get<LifterProfile>() : default_profile();
    if (seeds.contains("jitter")) s.profile.jitter_seed = seeds.at("jitter").get<std::uint64_t>();
    s.sim_duration = j.value("sim_duration_s", std::max(s.profile.duration(), 1.0));
    if (!(s.sim_duration > 0.0)) throw ScenarioError("sim_duration_s must be positive");
  } catch (const ScenarioError&) {
    throw;
  } catch (const InvalidPoseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ScenarioError(path + ": " + e.what());
  }
  // throws InvalidPoseError for a pose that is not a resting contact state
  classify_contact(s.plate, s.initial_pose, s.support, s.sampling.contact_tolerance);
  if (s.grasp_db_path.empty() && !j.contains("grasp_generator"))
    throw ScenarioError(path + ": needs \"grasp_db\" or \"grasp_generator\"");
  return s;
}

namespace {

json load_grasp_document(const Scenario& s) {
  if (!s.grasp_db_path.empty()) return read_json_file(s.grasp_db_path);
  const json j = read_json_file(s.path);
  return generate_grasps(s.plate, generator_from_json(j.at("grasp_generator")));
}

PlanningContext context_of(const Scenario& s) {
  PlanningContext ctx;
  ctx.plate = s.plate;
  ctx.suction = s.suction;
  ctx.arms = s.arms;
  ctx.world = s.world;
  ctx.physics = s.physics;
  ctx.ik = s.ik;
  ctx.max_ik_solutions = s.max_ik_solutions;
  return ctx;
}

}  // namespace

PlannerGraph build_planner(const Scenario& s, int jobs) {
  PlannerGraph g;
  auto t0 = std::chrono::steady_clock::now();
  g.csg = build_csg(s.plate);
  g.dcsg = sample_dcsg(g.csg, s.plate, s.support, s.initial_pose, s.sampling);
  g.start_node = g.dcsg.find_pose(s.initial_pose);
  g.t_dcsg = seconds_since(t0);
  g.rconfs = load_rconf_db(load_grasp_document(s), s.plate);
  const PlanningContext ctx = context_of(s);
  t0 = std::chrono::steady_clock::now();
  g.geometry = examine_geometry(g.dcsg, g.rconfs, ctx, jobs);
  g.t_geometry = seconds_since(t0);
  t0 = std::chrono::steady_clock::now();
  g.rvs = build_all_rvs(g.dcsg, g.rconfs, ctx, g.geometry, jobs);
  g.t_physics = seconds_since(t0);
  t0 = std::chrono::steady_clock::now();
  g.msg = merge_msg(g.dcsg, g.rconfs, g.rvs, s.cost);
  g.t_merge = seconds_since(t0);
  return g;
}

json graph_stats(const Scenario& s, const PlannerGraph& g) {
  std::map<std::string, int> per_pc;
  for (const auto& n : g.dcsg.nodes) per_pc[n.pc.label()]++;
  std::map<std::string, int> msg_per_pc;
  for (const auto& n : g.msg.nodes) msg_per_pc[n.pc.label()]++;
  std::size_t geo = 0, phys = 0;
  for (const auto& rv : g.rvs) geo += rv.geometric_rejects, phys += rv.physical_rejects;
  std::size_t grips = 0, pushes = 0;
  for (const auto& r : g.rconfs)
    if (r.size() == 1) (r.grip ? grips : pushes)++;
  return {{"scenario", s.name},
          {"csg", {{"nodes", g.csg.nodes.size()}, {"edges", g.csg.edges.size()}}},
          {"grasps", {{"grip", grips}, {"push", pushes}, {"rconfs", g.rconfs.size()}}},
          {"dcsg",
           {{"nodes", g.dcsg.nodes.size()},
            {"edges", g.dcsg.edges.size()},
            {"intra_edges", g.dcsg.intra_edge_count()},
            {"inter_edges", g.dcsg.inter_edge_count()},
            {"nodes_per_pc", per_pc}}},
          {"dcsg_rv", {{"geometric_rejects", geo}, {"physical_rejects", phys}}},
          {"msg",
           {{"nodes", g.msg.nodes.size()},
            {"edges", g.msg.edges.size()},
            {"transfer_edges", g.msg.transfer_count()},
            {"transit_edges", g.msg.transit_count()},
            {"nodes_per_pc", msg_per_pc}}},
          {"timings_s",
           {{"dcsg", g.t_dcsg}, {"dcsg_rv_geometric", g.t_geometry}, {"dcsg_rv_physical", g.t_physics},
            {"msg", g.t_merge}}}};
}

PlanOutcome plan_on_graph(const Scenario& s, const PlannerGraph& g, const PrincipalContact& goal) {
  PlanOutcome out;
  out.stats = graph_stats(s, g);
  auto t0 = std::chrono::steady_clock::now();
  PathResult path;
  std::string failure;
  try {
    if (g.start_node < 0) throw SearchSetError("initial pose is not a DCSG node");
    path = search(g.msg, g.start_node, goal, s.cost);
    if (!path.found) failure = "no path from the initial state to " + goal.label();
  } catch (const SearchSetError& e) {
    failure = e.what();
  }
  out.stats["timings_s"]["search"] = seconds_since(t0);

  if (!failure.empty()) {
    out.exit_code = kExitNoPath;
    std::string last = "none";
    if (g.start_node >= 0) {
      const auto frontier = reachable_frontier(g.msg, g.start_node);
      if (!frontier.empty())
        last = frontier.front()->pc.label() + " (DCSG node " + std::to_string(frontier.front()->dcsg_node) + ", R-Conf " +
               g.rconfs[frontier.front()->rconf].label() + ")";
    }
    out.message = "NO-PATH: " + failure + "; last reachable PC: " + last;
    out.stats["result"] = "no-path";
    out.stats["last_reachable_pc"] = last;
    out.plan = {{"scenario", s.name}, {"goal", goal.label()}, {"found", false}, {"message", out.message}};
    return out;
  }

  json nodes = json::array(), edges = json::array();
  std::vector<PrincipalContact> pcs;
  double max_force = 0.0;
  for (int v : path.nodes) {
    const auto& n = g.msg.nodes[v];
    nodes.push_back(node_json(n, g.dcsg, g.rconfs));
    pcs.push_back(n.pc);
    max_force = std::max(max_force, n.forces.f_gp_plus);
  }
  for (std::size_t i = 0; i + 1 < path.nodes.size(); ++i) {
    const auto& a = g.msg.nodes[path.nodes[i]];
    const auto& b = g.msg.nodes[path.nodes[i + 1]];
    edges.push_back({{"from", i}, {"to", i + 1}, {"kind", a.rconf == b.rconf ? "transfer" : "transit"}, {"cost", path.edge_costs[i]}});
  }
  const int changes = count_pc_changes(pcs);
  out.plan = {{"scenario", s.name},
              {"goal", goal.label()},
              {"found", true},
              {"plate", plate_to_json(s.plate)},
              {"support_height_m", s.support.height},
              {"initial_pose", pose_to_json(s.initial_pose)},
              {"suction", s.suction},
              {"physics", s.physics},
              {"cost", {{"k", s.cost.k}, {"omega", s.cost.omega}}},
              {"sampling", s.sampling},
              {"world", world_to_json(s.world)},
              {"arms", {{"left", arm_to_json(s.arms.left)}, {"right", arm_to_json(s.arms.right)}}},
              {"controller", s.controller},
              {"plant", s.plant},
              {"profile", s.profile},
              {"sim_duration_s", s.sim_duration},
              {"total_cost", path.cost},
              {"contact_changes", changes},
              {"nodes", nodes},
              {"edges", edges}};
  out.stats["result"] = "ok";
  out.stats["path"] = {{"nodes", path.nodes.size()},
                       {"edges", edges.size()},
                       {"contact_changes", changes},
                       {"cost", path.cost},
                       {"max_hand_force_n", max_force},
                       {"starts", path.starts_searched},
                       {"goals_reached", path.goals_reached}};
  std::ostringstream msg;
  msg << "plan: " << path.nodes.size() << " states, " << changes << " contact changes, cost " << path.cost;
  out.message = msg.str();
  return out;
}

PlanOutcome run_plan(const Scenario& s, const PrincipalContact& goal, int jobs) {
  const PlannerGraph g = build_planner(s, jobs);
  return plan_on_graph(s, g, goal);
}

std::vector<VerifyCheck> verify_plan(const json& plan) {
  std::vector<VerifyCheck> checks;
  auto add = [&](const std::string& name, bool pass, const std::string& detail = "") {
    checks.push_back({name, pass, detail});
  };
  if (!plan.value("found", false)) {
    add("plan document", false, "plan has no path");
    return checks;
  }
  const PlateModel plate = plate_from_json(plan.at("plate"));
  const SuctionConfig suction = plan.at("suction").get<SuctionConfig>();
  const PhysicsParams physics = plan.at("physics").get<PhysicsParams>();
  const EdgeCostParams cost{plan.at("cost").at("k").get<double>(), plan.at("cost").at("omega").get<double>()};
  const SamplingParams sampling = plan.at("sampling").get<SamplingParams>();
  DualArm arms;
  arms.left = arm_from_json(plan.at("arms").at("left"));
  arms.right = arm_from_json(plan.at("arms").at("right"));
  const ForceLimits limits{physics.hand_payload, suction.max_force};
  const ContactStateGraph csg = build_csg(plate);

  std::vector<PlanNode> nodes;
  for (const auto& nj : plan.at("nodes")) nodes.push_back(plan_node_from(nj, plate, physics.gravity));

  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& p = nodes[i];
    const std::string tag = "node " + std::to_string(i) + " (" + p.node.pc.label() + " " + p.rconf_label + ")";
    const auto rep = verify_solution(p.node.system, p.node.forces, limits);
    std::ostringstream d;
    d << "equilibrium " << rep.equilibrium_residual << ", worst margin " << rep.worst_cone_margin << " ("
      << rep.worst_constraint << ")";
    add(tag + " statics", rep.ok(1e-6), d.str());

    const auto world = to_world(p.rconf, p.pose);
    const ForceSystem expected = node_system(plate, p.pose, p.node.pc, world, &suction, physics);
    bool same = expected.contacts.size() == p.node.system.contacts.size();
    for (std::size_t c = 0; same && c < expected.contacts.size(); ++c) {
      const auto& a = expected.contacts[c];
      const auto& b = p.node.system.contacts[c];
      same = a.kind == b.kind && (a.frame.translation - b.frame.translation).norm() < 1e-9 &&
             (a.frame.rotation - b.frame.rotation).norm() < 1e-9;
    }
    add(tag + " contacts", same, same ? "" : "contact set does not match pose, PC and R-Conf");

    const Vec3 com = center_of_mass(plate, p.pose);
    const Joints tl = arm_torque(arms.left, p.node.joints.left, p.node.system, p.node.forces, com);
    const Joints tr = arm_torque(arms.right, p.node.joints.right, p.node.system, p.node.forces, com);
    const double ts = tl.cwiseAbs().sum() + tr.cwiseAbs().sum();
    add(tag + " torques", std::abs(ts - p.node.torque_sum) <= 1e-6 * std::max(1.0, ts),
        "recomputed " + std::to_string(ts) + " stored " + std::to_string(p.node.torque_sum));
    const int rank = restraint_rank(plate, p.pose, p.node.pc);
    add(tag + " restraint", rank == p.node.restraint, "rank " + std::to_string(rank));
  }

  auto same_pose = [](const Pose& a, const Pose& b) {
    return (a.translation - b.translation).cwiseAbs().maxCoeff() <= 1e-9 &&
           (a.rotation - b.rotation).cwiseAbs().maxCoeff() <= 1e-9;
  };
  auto same_rconf = [](const RConf& a, const RConf& b) { return rconf_subset(a, b) && rconf_subset(b, a); };

  double total = 0.0;
  const auto& edges = plan.at("edges");
  if (edges.size() + 1 != nodes.size()) add("edge list", false, "edge count does not match node count");
  for (std::size_t i = 0; i < edges.size() && i + 1 < nodes.size(); ++i) {
    const auto& a = nodes[i];
    const auto& b = nodes[i + 1];
    const std::string tag = "edge " + std::to_string(i) + " (" + a.node.pc.label() + " " + a.rconf_label + " -> " +
                            b.node.pc.label() + " " + b.rconf_label + ")";
    bool legal = false;
    std::string why;
    const bool rconf_same = same_rconf(a.rconf, b.rconf);
    const bool pose_same = same_pose(a.pose, b.pose);
    MsgNode na = a.node, nb = b.node;
    if (rconf_same) {
      if (a.node.pc == b.node.pc) {
        const double d = (center_of_mass(plate, a.pose) - center_of_mass(plate, b.pose)).norm();
        legal = d <= sampling.com_threshold + 1e-12;
        if (!legal) why = "CoM displacement " + std::to_string(d) + " m exceeds the threshold";
      } else {
        const ContactNode ca{0, a.node.pc, a.pose, center_of_mass(plate, a.pose)};
        const ContactNode cb{1, b.node.pc, b.pose, center_of_mass(plate, b.pose)};
        legal = csg.adjacent(csg.index_of(a.node.pc), csg.index_of(b.node.pc)) &&
                pose_compatible(csg, plate, ca, cb, sampling.contact_tolerance);
        if (!legal) why = "PCs are not adjacent or the poses are not compatible";
      }
      na.rconf = nb.rconf = 0;
    } else {
      legal = pose_same && a.node.pc == b.node.pc &&
              (rconf_subset(a.rconf, b.rconf) || rconf_subset(b.rconf, a.rconf));
      if (!legal)
        why = pose_same ? "R-Confs are not subset related" : "plate pose and R-Conf change simultaneously";
      na.rconf = 0;
      nb.rconf = 1;
    }
    add(tag + " legality", legal, why);
    const double expected = edge_cost(na, nb, cost);
    const double stored = edges[i].at("cost").get<double>();
    add(tag + " cost", std::abs(expected - stored) <= 1e-9 * std::max(1.0, std::abs(expected)),
        "expected " + std::to_string(expected) + " stored " + std::to_string(stored));
    total += stored;
  }
  const double stored_total = plan.at("total_cost").get<double>();
  add("path total", std::abs(total - stored_total) <= 1e-9 * std::max(1.0, std::abs(total)),
      "sum " + std::to_string(total) + " stored " + std::to_string(stored_total));
  const auto goal = PrincipalContact::parse(plan.at("goal").get<std::string>());
  add("goal reached", !nodes.empty() && nodes.back().node.pc == goal, goal.label());
  add("starts at initial pose", !nodes.empty() && same_pose(nodes.front().pose, pose_from_json(plan.at("initial_pose"))));
  std::vector<PrincipalContact> pcs;
  for (const auto& n : nodes) pcs.push_back(n.node.pc);
  add("contact changes", count_pc_changes(pcs) == plan.at("contact_changes").get<int>());
  return checks;
}

MsgNode terminal_node(const json& plan) {
  if (!plan.value("found", false) || plan.at("nodes").empty()) throw LiftError("plan has no path");
  const PlateModel plate = plate_from_json(plan.at("plate"));
  const PhysicsParams physics = plan.at("physics").get<PhysicsParams>();
  return plan_node_from(plan.at("nodes").back(), plate, physics.gravity).node;
}

LifterProfile resolve_profile(const std::string& spec, const json& plan, std::optional<std::uint64_t> seed) {
  LifterProfile p;
  if (spec.empty())
    p = plan.contains("profile") ? plan.at("profile").get<LifterProfile>() : default_profile();
  else if (spec == "default")
    p = default_profile();
  else if (spec == "zero")
    p = zero_profile(plan.value("sim_duration_s", 10.0));
  else
    p = read_json_file(spec).get<LifterProfile>();
  if (seed && p.jitter_seed) p.jitter_seed = *seed;
  return p;
}

Trace simulate_plan(const json& plan, const LifterProfile& profile, std::optional<std::uint64_t> seed) {
  const MsgNode node = terminal_node(plan);
  const PlateModel plate = plate_from_json(plan.at("plate"));
  const SuctionConfig suction = plan.at("suction").get<SuctionConfig>();
  const ControllerParams controller = plan.at("controller").get<ControllerParams>();
  PlantParams plant = plan.at("plant").get<PlantParams>();
  if (seed) plant.noise_seed = *seed;
  const double duration = std::max(plan.value("sim_duration_s", 10.0), profile.duration());
  return simulate_lift(node, plate, suction, profile, controller, plant, duration);
}

int cmd_plan(const std::string& scenario_path, const std::string& goal_label, const std::string& out_dir,
             std::optional<unsigned> seed, int jobs, std::ostream& out, std::ostream& err) {
  Scenario s;
  PrincipalContact goal;
  try {
    s = load_scenario(scenario_path);
    if (seed) s.ik.seed = *seed;
    goal = PrincipalContact::parse(goal_label);
  } catch (const std::exception& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitInvalid;
  }
  const PlanOutcome r = run_plan(s, goal, std::max(1, jobs));
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_json(fs::path(out_dir) / "plan.json", r.plan);
    write_json(fs::path(out_dir) / "stats.json", r.stats);
  }
  (r.exit_code == kExitOk ? out : err) << r.message << "\n";
  return r.exit_code;
}

int cmd_simulate(const std::string& plan_path, const std::string& profile_spec, const std::string& out_dir,
                 std::optional<std::uint64_t> seed, std::ostream& out, std::ostream& err) {
  json plan;
  LifterProfile profile;
  try {
    plan = read_json_file(plan_path);
    const MsgNode node = terminal_node(plan);
    if (!node.pc.is_none()) throw LiftError("plan ends in " + node.pc.label() + ", not No Contact");
    profile = resolve_profile(profile_spec, plan, seed);
  } catch (const std::exception& e) {
    err << "refused: " << e.what() << "\n";
    return kExitInvalid;
  }
  const Trace trace = simulate_plan(plan, profile, seed);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_text_file((fs::path(out_dir) / "trace.csv").string(), trace_to_csv(trace));
    write_json(fs::path(out_dir) / "trace_events.json", trace_events_json(trace));
  }
  (trace.success() ? out : err) << "simulate: " << trace.message << " (" << trace.rows.size() << " samples)\n";
  return trace.success() ? kExitOk : kExitNoPath;
}

int cmd_verify(const std::string& plan_path, std::ostream& out, std::ostream& err) {
  std::vector<VerifyCheck> checks;
  try {
    checks = verify_plan(read_json_file(plan_path));
  } catch (const std::exception& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitInvalid;
  }
  bool all = true;
  for (const auto& c : checks) {
    out << (c.pass ? "PASS " : "FAIL ") << c.name;
    if (!c.pass && !c.detail.empty()) out << ": " << c.detail;
    out << "\n";
    all = all && c.pass;
  }
  out << (all ? "PASS" : "FAIL") << " overall\n";
  return all ? kExitOk : kExitNoPath;
}

int cmd_graph_stats(const std::string& scenario_path, const std::string& out_dir, int jobs, std::ostream& out,
                    std::ostream& err) {
  Scenario s;
  try {
    s = load_scenario(scenario_path);
  } catch (const std::exception& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitInvalid;
  }
  const PlannerGraph g = build_planner(s, std::max(1, jobs));
  const json stats = graph_stats(s, g);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_json(fs::path(out_dir) / "graph_stats.json", stats);
    write_text_file((fs::path(out_dir) / "dcsg.dot").string(), dcsg_to_dot(g.dcsg));
  }
  out << stats.dump(2) << "\n";
  return kExitOk;
}

int cmd_gen_grasps(const std::string& scenario_path, const std::string& out_path, std::ostream& out,
                   std::ostream& err) {
  json doc;
  try {
    const json j = read_json_file(scenario_path);
    const PlateModel plate = plate_from_json(j.at("plate"));
    doc = generate_grasps(plate, generator_from_json(j.value("grasp_generator", json::object())));
    load_rconf_db(doc, plate);  // validates every generated entry
  } catch (const std::exception& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitInvalid;
  }
  if (out_path.empty())
    out << doc.dump(2) << "\n";
  else {
    write_json(out_path, doc);
    out << "wrote " << doc.at("grips").size() << " grips and " << doc.at("pushes").size() << " pushes to " << out_path
        << "\n";
  }
  return kExitOk;
}

}  // namespace platelift
