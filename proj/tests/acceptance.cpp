// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include "platelift/cli.hpp"

#include <Eigen/SVD>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <queue>
#include <random>
#include <set>
#include <sstream>

using namespace platelift;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kScenarios = std::string(PLATELIFT_SOURCE_DIR) + "/scenarios/";
const PlateModel kAB{0.3, 0.3, 0.04, 4.0, Vec3::Zero()};
const PlateModel kPB{0.5, 0.4, 0.044, 6.4, Vec3::Zero()};
const Pose kFlat = Pose::from_translation(Vec3(0, 0, 0.02));
constexpr double kInf = std::numeric_limits<double>::infinity();

int failures = 0;

void report(int id, const std::string& title, bool pass, const std::string& detail) {
  std::cout << (pass ? "PASS" : "FAIL") << " [" << id << "] " << title << ": " << detail << std::endl;
  if (!pass) ++failures;
}

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------- 1
void csg_structure() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto csg = build_csg(kAB);
  const double secs = since(t0);
  bool ok = csg.nodes.size() == 10 && csg.edges.size() == 21;
  const int none = csg.index_of(PrincipalContact::no_contact());
  const int face = csg.index_of(PrincipalContact::on_support(kBottomFace));
  std::set<std::pair<int, int>> expected;
  auto add = [&](int a, int b) { expected.insert({std::min(a, b), std::max(a, b)}); };
  for (int e = kFirstEdge; e < kFirstVertex; ++e) {
    const int en = csg.index_of(PrincipalContact::on_support(e));
    add(face, en);
    for (int v : csg.elements[e].boundary) add(en, csg.index_of(PrincipalContact::on_support(v)));
  }
  for (int i = 0; i < static_cast<int>(csg.nodes.size()); ++i)
    if (i != none) add(i, none);
  std::set<std::pair<int, int>> got;
  for (auto [a, b] : csg.edges) got.insert({std::min(a, b), std::max(a, b)});
  ok = ok && got == expected && secs < 1.0;
  for (int e = kFirstEdge; e < kFirstVertex; ++e) ok = ok && csg.elements[e].boundary.size() == 2;
  report(1, "CSG structure", ok,
         std::to_string(csg.nodes.size()) + " nodes, " + std::to_string(csg.edges.size()) + " edges, adjacency " +
             (got == expected ? "matches" : "differs") + ", " + fmt("%.4f s", secs));
}

// ---------------------------------------------------------------- 2
int svd_rank(const PlateModel& plate, const Pose& pose, const PrincipalContact& pc) {
  const auto pts = contact_points(plate, pose, pc);
  if (pts.empty()) return 0;
  const Vec3 com = center_of_mass(plate, pose);
  Eigen::MatrixXd T(pts.size(), 6);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec3 r = pts[i] - com, n = Vec3::UnitZ();
    T.row(i) << n.transpose(), r.cross(n).transpose();
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(T);
  const auto& s = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < s.size(); ++i) rank += s[i] > 1e-9 * s[0];
  return rank;
}

void restraint_and_costs() {
  const std::vector<std::pair<PrincipalContact, int>> cases = {{PrincipalContact::on_support(kBottomFace), 3},
                                                               {PrincipalContact::on_support(kFirstEdge), 2},
                                                               {PrincipalContact::on_support(kFirstVertex), 1},
                                                               {PrincipalContact::no_contact(), 0}};
  bool ok = true;
  std::string ranks;
  for (const auto& [pc, want] : cases) {
    const int got = restraint_rank(kAB, kFlat, pc);
    ok = ok && got == want && got == svd_rank(kAB, kFlat, pc);
    ranks += std::to_string(got) + " ";
  }
  MsgNode face, edge;
  face.pc = PrincipalContact::on_support(kBottomFace);
  face.restraint = 3;
  edge.pc = PrincipalContact::on_support(kFirstEdge);
  edge.restraint = 2;
  const EdgeCostParams p{1.0, 1.0};
  const double down = edge_cost(face, edge, p), up = edge_cost(edge, face, p);
  const double err = std::max(std::abs(down - std::exp(-1.0)), std::abs(up - std::exp(1.0)));
  ok = ok && err <= 1e-12;
  report(2, "Restraint ranks and transfer costs", ok,
         "ranks face/edge/vertex/none = " + ranks + "(SVD oracle agrees), costs " + fmt("%.6f", down) + " / " +
             fmt("%.6f", up) + ", error " + fmt("%.1e", err));
}

// ---------------------------------------------------------------- 3
void statics() {
  const auto rest = assemble_system(kAB, environment_contacts(kAB, kFlat, PrincipalContact::on_support(kBottomFace), 0.3));
  const auto sol = solve_socp(rest, {}, {15.0, 20.0});
  bool ok = sol.feasible() && sol.f_gp_plus == 0.0 && sol.f_s_plus == 0.0;
  double worst_vertex = 0.0;
  for (const auto& w : sol.wrenches) worst_vertex = std::max(worst_vertex, std::abs(w[2] - 9.81));
  ok = ok && worst_vertex <= 0.01;

  // every feasible node solution of a dense sweep
  const auto csg = build_csg(kAB);
  SamplingParams sp;
  sp.edge_tilts_deg = {20, 50, 80};
  sp.vertex_tilts_deg = {{10, 10}, {20, 20}};
  sp.none_heights = {0.1};
  const auto dcsg = sample_dcsg(csg, kAB, {0.0}, kFlat, sp);
  const auto db = load_rconf_db(generate_grasps(kAB, {}), kAB);
  PhysicsParams physics;
  std::size_t solved = 0, feasible = 0, passed = 0;
  double worst_res = 0.0;
  for (double cup : {20.0, 60.0}) {
    SuctionConfig s;
    s.point = Vec3(0, 0.11, 0.02);
    s.max_force = cup;
    for (const auto& node : dcsg.nodes)
      for (std::size_t r = 0; r < db.size(); r += 5) {
        const auto sys = node_system(kAB, node.pose, node.pc, to_world(db[r], node.pose), &s, physics);
        const ForceLimits limits{physics.hand_payload, cup};
        const auto f = solve_socp(sys, physics.weights, limits);
        ++solved;
        if (!f.feasible()) continue;
        ++feasible;
        const auto rep = verify_solution(sys, f, limits);
        worst_res = std::max(worst_res, rep.equilibrium_residual);
        passed += rep.ok(1e-6);
      }
  }
  ok = ok && feasible > 0 && passed == feasible;
  report(3, "Statics", ok,
         "resting AB max vertex error " + fmt("%.2e N", worst_vertex) + ", f_gp+ = f_s+ = 0; " +
             std::to_string(passed) + "/" + std::to_string(feasible) + " feasible of " + std::to_string(solved) +
             " systems pass verification, worst residual " + fmt("%.1e", worst_res));
}

// ---------------------------------------------------------------- 4
void suction_thresholds() {
  SuctionConfig s;
  s.point = Vec3(0, 0, 0.02);
  s.max_force = 20.0;
  const auto weak = solve_socp(assemble_system(kAB, {suction_contact(s, kAB, kFlat)}), {}, {15.0, 20.0});
  s.max_force = 60.0;
  const auto strong = solve_socp(assemble_system(kAB, {suction_contact(s, kAB, kFlat)}), {}, {15.0, 60.0});
  SuctionConfig s20, s60;
  s20.max_force = 20.0;
  s60.max_force = 60.0;
  const double r_ab = red_line(kAB, s20), r_pb = red_line(kPB, s60);
  const bool ok = !weak.feasible() && strong.feasible() && std::abs(strong.f_s_plus - 39.24) <= 0.01 &&
                  std::abs(r_ab - 19.24) <= 0.01 && std::abs(r_pb - 2.78) <= 0.01;
  report(4, "Suction thresholds", ok,
         std::string("AB 20 N cup ") + (weak.feasible() ? "feasible" : "infeasible") + ", 60 N cup f_s+ = " +
             fmt("%.4f N", strong.f_s_plus) + ", red lines " + fmt("%.3f", r_ab) + " / " + fmt("%.3f N", r_pb));
}

// ---------------------------------------------------------------- 5
double ucs(const WeightedDigraph& g, const std::vector<int>& starts, const std::vector<char>& is_goal) {
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  std::vector<char> closed(g.size(), 0);
  for (int s : starts) open.push({0.0, s});
  while (!open.empty()) {
    const auto [d, u] = open.top();
    open.pop();
    if (closed[u]) continue;
    closed[u] = 1;
    if (is_goal[u]) return d;
    for (auto [v, c] : g.out[u])
      if (!closed[v]) open.push({d + c, v});
  }
  return kInf;
}

void search_optimality() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2024);
  int equal = 0, found = 0;
  for (int t = 0; t < 100; ++t) {
    const int n = 2 + static_cast<int>(rng() % 199);
    WeightedDigraph g;
    g.out.assign(n, {});
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> w(1, 50);
    const double density = std::min(1.0, 3.0 / n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        if (a != b && u(rng) < density) g.add_arc(a, b, w(rng));
    std::vector<int> starts, goals;
    std::vector<char> is_goal(n, 0);
    const int ns = 1 + static_cast<int>(rng() % 4), ng = 1 + static_cast<int>(rng() % 4);
    for (int i = 0; i < ns; ++i) starts.push_back(static_cast<int>(rng() % n));
    for (int i = 0; i < ng; ++i) {
      goals.push_back(static_cast<int>(rng() % n));
      is_goal[goals.back()] = 1;
    }
    const double oracle = ucs(g, starts, is_goal);
    const auto r = multi_search(g, starts, goals);
    const bool same = r.found ? r.cost == oracle : oracle == kInf;
    equal += same;
    found += r.found;
  }
  const double secs = since(t0);
  report(5, "Search optimality", equal == 100 && secs < 10.0,
         std::to_string(equal) + "/100 random graphs equal the uniform-cost oracle over all start-goal pairs (" +
             std::to_string(found) + " with a path), " + fmt("%.2f s", secs));
}

// ---------------------------------------------------------------- 6
double controller_error(double dt) {
  ControllerParams c;
  c.M_d = 1.0;
  c.B_d = 2.0;
  c.K_d = 1.0;
  c.dt = dt;
  c.velocity_floor.reset();
  c.integral_limit = 1e9;
  ControllerState s;
  double worst = 0.0;
  const long n = std::lround(5.0 / dt);
  for (long k = 1; k <= n; ++k) {
    s = controller_step(s, 1.0, c).state;
    const double t = k * dt;
    worst = std::max(worst, std::abs(s.V - t * std::exp(-t)));
  }
  return worst;
}

void controller() {
  const double e1 = controller_error(1e-3), e2 = controller_error(5e-4);
  report(6, "Controller closed form", e1 <= 1e-3 && e2 <= 0.5 * e1,
         "max error " + fmt("%.3e", e1) + " at dt 1e-3, " + fmt("%.3e", e2) + " at dt 5e-4 (ratio " +
             fmt("%.3f", e1 / e2) + ")");
}

// ---------------------------------------------------------------- 7, 8
struct ScenarioRun {
  std::string name;
  PlanOutcome outcome;
  bool verified = false;
};

std::vector<ScenarioRun> runs;
double planning_seconds = 0.0;

void plan_all() {
  const auto t0 = std::chrono::steady_clock::now();
  for (const char* name : {"ab1", "ab2", "ab3", "pb1", "pb2", "pb1_20n"}) {
    ScenarioRun r;
    r.name = name;
    r.outcome = run_plan(load_scenario(kScenarios + name + ".json"), PrincipalContact::no_contact());
    if (r.outcome.exit_code == kExitOk) {
      r.verified = true;
      for (const auto& c : verify_plan(r.outcome.plan)) r.verified = r.verified && c.pass;
    }
    runs.push_back(std::move(r));
  }
  planning_seconds = since(t0);
}

double correlation(const std::vector<double>& x, const std::vector<double>& y, int lag) {
  const std::size_t n = x.size() - lag;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) mx += x[i], my += y[i + lag];
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = x[i] - mx, b = y[i + lag] - my;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
  }
  return sxx > 0 && syy > 0 ? sxy / std::sqrt(sxx * syy) : 0.0;
}

void closed_loop() {
  const auto& plan = runs.front().outcome.plan;
  if (runs.front().outcome.exit_code != kExitOk) {
    report(7, "Closed-loop lift", false, "ab1 has no plan");
    return;
  }
  const auto profile = resolve_profile("", plan, std::nullopt);
  const Trace tr = simulate_plan(plan, profile, std::nullopt);
  const double mg = tr.mass * tr.gravity;

  // steady state: rows where a still lifter segment of at least 0.4 s ends
  double worst_balance = 0.0;
  int steady = 0;
  double t = 0.0;
  for (const auto& s : profile.expanded()) {
    t += s.duration;
    if (s.speed != 0.0 || s.duration < 0.4) continue;
    const TraceRow* row = nullptr;
    for (const auto& r : tr.rows)
      if (r.time <= t + 1e-9) row = &r;
    if (!row) continue;
    ++steady;
    worst_balance = std::max(worst_balance, std::abs(row->F_sum - (mg - row->pad_tension)));
  }

  // red line dips
  double longest = 0.0, run = 0.0, min_sum = kInf;
  for (std::size_t i = 1; i < tr.rows.size(); ++i) {
    const auto& r = tr.rows[i];
    min_sum = std::min(min_sum, r.F_sum);
    run = r.F_sum < r.red_line ? run + (r.time - tr.rows[i - 1].time) : 0.0;
    longest = std::max(longest, run);
  }

  // drop-to-increase: force drop below its target against the commanded speed
  const double goal = tr.targets.has_push ? tr.targets.push : tr.targets.grip;
  std::vector<double> drop, dfall, v, v1;
  for (std::size_t i = 0; i < tr.rows.size(); ++i) {
    const double F = tr.targets.has_push ? tr.rows[i].F_push : tr.rows[i].F_grip;
    drop.push_back(goal - F);
    v.push_back(tr.rows[i].V_out);
    if (i > 0) {
      const double Fp = tr.targets.has_push ? tr.rows[i - 1].F_push : tr.rows[i - 1].F_grip;
      dfall.push_back(Fp - F);
      v1.push_back(tr.rows[i].V_out);
    }
  }
  double best = -1.0;
  std::string lags, dlags;
  for (int lag = 0; lag <= 3; ++lag) {
    const double c = correlation(drop, v, lag);
    best = std::max(best, c);
    lags += fmt(" %.3f", c);
    dlags += fmt(" %.3f", correlation(dfall, v1, lag));
  }
  const bool ok = tr.success() && steady > 0 && worst_balance <= 0.05 && longest < 0.5 && best > 0.0;
  report(7, "Closed-loop lift", ok,
         std::string(tr.success() ? "ok" : "detached") + ", F_sum + tension - mg worst " +
             fmt("%.4f N", worst_balance) + " over " + std::to_string(steady) + " steady ends, min F_sum " +
             fmt("%.2f N", min_sum) + " vs red line " + fmt("%.2f N", tr.rows.front().red_line) +
             ", longest dip " + fmt("%.3f s", longest) + ", corr(F_goal-F_push, V_out) lags 0-3:" + lags +
             " (step-difference reading:" + dlags + ")");
}

void end_to_end() {
  bool ok = planning_seconds < 600.0;
  std::string detail;
  for (const auto& r : runs) {
    std::string d = r.name + " ";
    if (r.name == "pb1_20n") {
      const bool nopath = r.outcome.exit_code == kExitNoPath;
      ok = ok && nopath;
      d += nopath ? "NO-PATH" : "unexpected plan";
    } else if (r.outcome.exit_code != kExitOk) {
      ok = false;
      d += "no plan";
    } else {
      const auto& p = r.outcome.plan;
      const int changes = p.at("contact_changes").get<int>();
      const bool good = p.at("nodes").back().at("pc") == "No Contact" && changes >= 1 && changes <= 5 && r.verified;
      ok = ok && good;
      d += std::to_string(changes) + " changes, cost " + fmt("%.4f", p.at("total_cost").get<double>()) +
           (r.verified ? ", verified" : ", verify FAIL");
    }
    detail += d + "; ";
  }
  report(8, "End-to-end scenarios", ok, detail + fmt("%.1f s total", planning_seconds));
}

// ---------------------------------------------------------------- 9
void determinism() {
  const fs::path dir = fs::temp_directory_path() / "platelift_acceptance";
  fs::remove_all(dir);
  std::ostringstream out, err;
  const std::string scenario = kScenarios + "ab1.json";
  const int a = cmd_plan(scenario, "No Contact", (dir / "a").string(), std::nullopt, 1, out, err);
  const int b = cmd_plan(scenario, "No Contact", (dir / "b").string(), std::nullopt, 1, out, err);
  const bool plans = a == kExitOk && b == kExitOk && slurp(dir / "a" / "plan.json") == slurp(dir / "b" / "plan.json");
  const int c = cmd_simulate((dir / "a" / "plan.json").string(), "", (dir / "sa").string(), std::nullopt, out, err);
  const int d = cmd_simulate((dir / "a" / "plan.json").string(), "", (dir / "sb").string(), std::nullopt, out, err);
  const std::string ta = slurp(dir / "sa" / "trace.csv");
  const bool traces = c == kExitOk && d == kExitOk && !ta.empty() && ta == slurp(dir / "sb" / "trace.csv");
  report(9, "Determinism", plans && traces,
         std::string("plan.json ") + (plans ? "identical" : "differs") + " across runs, trace.csv " +
             (traces ? "identical" : "differs") + " (" + std::to_string(ta.size()) + " bytes)");
}

}  // namespace

int main() {
  csg_structure();
  restraint_and_costs();
  statics();
  suction_thresholds();
  search_optimality();
  controller();
  plan_all();
  closed_loop();
  end_to_end();
  determinism();
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
