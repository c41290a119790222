#include "platelift/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace platelift;
  CLI::App app{"Dual-arm plate lifting with a vacuum lifter: planning, lift simulation, verification"};
  app.require_subcommand(1);

  std::string scenario, goal = "No Contact", out, profile, plan;
  std::optional<unsigned> seed;
  int jobs = 1;

  auto* plan_cmd = app.add_subcommand("plan", "Build the manipulation state graph and search a sequence");
  plan_cmd->add_option("--scenario", scenario, "Scenario JSON")->required();
  plan_cmd->add_option("--goal", goal, "Goal contact state, e.g. \"No Contact\" or \"<e3_p-f_t>\"");
  plan_cmd->add_option("--out", out, "Output directory for plan.json and stats.json");
  plan_cmd->add_option("--seed", seed, "IK seed");
  plan_cmd->add_option("--jobs", jobs, "Parallel feasibility workers")->check(CLI::PositiveNumber);

  auto* sim_cmd = app.add_subcommand("simulate", "Simulate the cooperative lift of a plan's terminal state");
  sim_cmd->add_option("--plan", plan, "plan.json")->required();
  sim_cmd->add_option("--profile", profile, "\"default\", \"zero\" or a profile JSON file");
  sim_cmd->add_option("--out", out, "Output directory for trace.csv and trace_events.json");
  sim_cmd->add_option("--seed", seed, "Jitter and sensor noise seed");

  auto* verify_cmd = app.add_subcommand("verify", "Recheck statics, edge legality and costs of a plan");
  verify_cmd->add_option("--plan", plan, "plan.json")->required();

  auto* stats_cmd = app.add_subcommand("graph-stats", "Build the graphs and report their sizes");
  stats_cmd->add_option("--scenario", scenario, "Scenario JSON")->required();
  stats_cmd->add_option("--out", out, "Output directory for graph_stats.json and dcsg.dot");
  stats_cmd->add_option("--jobs", jobs, "Parallel feasibility workers")->check(CLI::PositiveNumber);

  auto* grasp_cmd = app.add_subcommand("gen-grasps", "Generate a grasp database for the scenario plate");
  grasp_cmd->add_option("--scenario", scenario, "Scenario JSON (plate and grasp_generator)")->required();
  grasp_cmd->add_option("--out", out, "grasps.json path (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    std::optional<std::uint64_t> seed64;
    if (seed) seed64 = *seed;
    if (plan_cmd->parsed()) return cmd_plan(scenario, goal, out, seed, jobs, std::cout, std::cerr);
    if (sim_cmd->parsed()) return cmd_simulate(plan, profile, out, seed64, std::cout, std::cerr);
    if (verify_cmd->parsed()) return cmd_verify(plan, std::cout, std::cerr);
    if (stats_cmd->parsed()) return cmd_graph_stats(scenario, out, jobs, std::cout, std::cerr);
    if (grasp_cmd->parsed()) return cmd_gen_grasps(scenario, out, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitInvalid;
}
