#include "platelift/statics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace platelift {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

std::string to_string(ContactKind kind) {
  switch (kind) {
    case ContactKind::GripFinger: return "grip";
    case ContactKind::Push: return "push";
    case ContactKind::Environment: return "environment";
    case ContactKind::Suction: return "suction";
  }
  return "unknown";
}

Vec6 Wrench::stacked() const {
  Vec6 w;
  w << force, torque;
  return w;
}

void ObjectiveWeights::validate() const {
  if (!(k_gp >= 0.0) || !(k_s >= 0.0)) throw std::invalid_argument("objective weights must be non-negative");
  if (k_gp == 0.0 && k_s == 0.0) throw std::invalid_argument("objective weights must not both be zero");
}

void PhysicsParams::validate() const {
  if (!(gravity > 0.0)) throw std::invalid_argument("gravity must be positive");
  if (!(mu_grip >= 0.0) || !(mu_push >= 0.0) || !(mu_env >= 0.0))
    throw std::invalid_argument("friction coefficients must be non-negative");
  if (!(epsilon > 0.0)) throw std::invalid_argument("soft-finger eccentricity must be positive");
  if (!(hand_payload >= 0.0)) throw std::invalid_argument("hand payload must be non-negative");
  weights.validate();
}

void to_json(json& j, const PhysicsParams& p) {
  j = {{"gravity", p.gravity}, {"mu_grip", p.mu_grip},   {"mu_push", p.mu_push},
       {"mu_env", p.mu_env},   {"epsilon_m", p.epsilon}, {"hand_payload_n", p.hand_payload},
       {"k_gp", p.weights.k_gp}, {"k_s", p.weights.k_s}};
}

void from_json(const json& j, PhysicsParams& p) {
  p.gravity = j.value("gravity", p.gravity);
  p.mu_grip = j.value("mu_grip", p.mu_grip);
  p.mu_push = j.value("mu_push", p.mu_push);
  p.mu_env = j.value("mu_env", p.mu_env);
  p.epsilon = j.value("epsilon_m", p.epsilon);
  p.hand_payload = j.value("hand_payload_n", p.hand_payload);
  p.weights.k_gp = j.value("k_gp", p.weights.k_gp);
  p.weights.k_s = j.value("k_s", p.weights.k_s);
}

Mat6 grasp_map(const Pose& f) {
  Mat6 G = Mat6::Zero();
  G.block<3, 3>(0, 0) = f.rotation;
  G.block<3, 3>(3, 0) = skew(f.translation) * f.rotation;
  G.block<3, 3>(3, 3) = f.rotation;
  return G;
}

Vec3 center_of_mass(const PlateModel& plate, const Pose& plate_pose) { return plate_pose * plate.com_offset; }

namespace {

ContactSpec point_contact(ContactKind kind, const Vec3& point, const Vec3& normal, const Vec3& com, double mu,
                          std::string label) {
  ContactSpec c;
  c.kind = kind;
  c.frame.rotation = frame_from_z(normal.normalized());
  c.frame.translation = point - com;
  c.mu = mu;
  c.label = std::move(label);
  return c;
}

}  // namespace

std::vector<ContactSpec> environment_contacts(const PlateModel& plate, const Pose& plate_pose,
                                              const PrincipalContact& pc, double mu) {
  std::vector<ContactSpec> out;
  const Vec3 com = center_of_mass(plate, plate_pose);
  int k = 0;
  for (const auto& p : contact_points(plate, plate_pose, pc))
    out.push_back(point_contact(ContactKind::Environment, p, Vec3::UnitZ(), com, mu, "e" + std::to_string(k++)));
  return out;
}

std::vector<ContactSpec> hand_contacts(const HandPlacement& pl, const Vec3& com, const PhysicsParams& params) {
  std::vector<ContactSpec> out;
  int k = 0;
  for (const auto& c : pl.contacts) {
    if (pl.hand == HandKind::Grip) {
      auto spec = point_contact(ContactKind::GripFinger, c.point, c.normal, com, params.mu_grip,
                                pl.id + "/f" + std::to_string(k++));
      spec.epsilon = params.epsilon;
      out.push_back(spec);
    } else {
      out.push_back(point_contact(ContactKind::Push, c.point, c.normal, com, params.mu_push, pl.id));
    }
  }
  return out;
}

ContactSpec suction_contact(const SuctionConfig& suction, const PlateModel& plate, const Pose& plate_pose) {
  auto c = point_contact(ContactKind::Suction, plate_pose * suction.point, plate_pose.rotate(Vec3::UnitZ()),
                         center_of_mass(plate, plate_pose), suction.mu, "suction");
  c.pad_radius = suction.pad_radius;
  c.kappa = suction.kappa;
  return c;
}

ForceSystem assemble_system(const PlateModel& plate, const std::vector<ContactSpec>& contacts, double gravity) {
  ForceSystem sys;
  sys.contacts = contacts;
  sys.mass = plate.mass;
  sys.gravity = gravity;
  sys.G.resize(6, 6 * static_cast<int>(contacts.size()));
  for (std::size_t i = 0; i < contacts.size(); ++i) sys.G.block<6, 6>(0, 6 * i) = grasp_map(contacts[i].frame);
  sys.omega_g << 0, 0, -plate.mass * gravity, 0, 0, 0;
  return sys;
}

ForceSystem node_system(const PlateModel& plate, const Pose& plate_pose, const PrincipalContact& pc,
                        const std::vector<HandPlacement>& world_placements, const SuctionConfig* suction,
                        const PhysicsParams& params) {
  std::vector<ContactSpec> contacts;
  const Vec3 com = center_of_mass(plate, plate_pose);
  for (HandKind kind : {HandKind::Grip, HandKind::Push})
    for (const auto& pl : world_placements)
      if (pl.hand == kind)
        for (auto& c : hand_contacts(pl, com, params)) contacts.push_back(std::move(c));
  if (suction) contacts.push_back(suction_contact(*suction, plate, plate_pose));
  for (auto& c : environment_contacts(plate, plate_pose, pc, params.mu_env)) contacts.push_back(std::move(c));
  return assemble_system(plate, contacts, params.gravity);
}

namespace {

// Active wrench components per contact model.
std::vector<int> active_components(const ContactSpec& c) {
  switch (c.kind) {
    case ContactKind::GripFinger: return c.mu > 0 ? std::vector<int>{0, 1, 2, 5} : std::vector<int>{2};
    case ContactKind::Push:
    case ContactKind::Environment: return c.mu > 0 ? std::vector<int>{0, 1, 2} : std::vector<int>{2};
    case ContactKind::Suction: return {0, 1, 2, 3, 4, 5};
  }
  return {};
}

bool is_hand(ContactKind k) { return k == ContactKind::GripFinger || k == ContactKind::Push; }

struct LinRow {
  std::vector<std::pair<int, double>> coef;  // coef . x <= h
  double h = 0.0;
};

}  // namespace

ForceSolution solve_socp(const ForceSystem& sys, const ObjectiveWeights& weights, const ForceLimits& limits,
                         const SolverSettings& settings) {
  weights.validate();
  const std::size_t nc = sys.contacts.size();
  const bool hands_allowed = limits.hand_payload > 0.0;
  const bool suction_allowed = limits.suction_max > 0.0;

  // Contacts that cannot carry load are left out of the program (their
  // wrench is zero); keeping them would leave the feasible set without an
  // interior.
  std::vector<std::array<int, 6>> index(nc);
  int nv = 0;
  bool any_hand = false, any_suction = false;
  for (std::size_t i = 0; i < nc; ++i) {
    index[i].fill(-1);
    const auto& c = sys.contacts[i];
    if (is_hand(c.kind) && !hands_allowed) continue;
    if (c.kind == ContactKind::Suction && !suction_allowed) continue;
    any_hand = any_hand || is_hand(c.kind);
    any_suction = any_suction || c.kind == ContactKind::Suction;
    for (int comp : active_components(c)) index[i][comp] = nv++;
  }
  const int v_gp = any_hand ? nv++ : -1;
  const int v_s = any_suction ? nv++ : -1;

  ForceSolution out;
  out.wrenches.assign(nc, Vec6::Zero());
  const VectorXd b = -sys.omega_g;
  if (nv == 0) {
    out.residual = b.cwiseAbs().maxCoeff();
    out.status = out.residual <= 1e-12 ? SolverStatus::Optimal : SolverStatus::PrimalInfeasible;
    return out;
  }

  std::vector<LinRow> lin;
  std::vector<std::vector<std::pair<int, double>>> socs;  // each entry: rows of s = -G x
  for (std::size_t i = 0; i < nc; ++i) {
    const auto& c = sys.contacts[i];
    const auto& ix = index[i];
    if (ix[2] < 0) continue;
    const int fz = ix[2];
    switch (c.kind) {
      case ContactKind::GripFinger:
      case ContactKind::Push:
        lin.push_back({{{fz, -1.0}}, 0.0});
        lin.push_back({{{fz, 1.0}, {v_gp, -1.0}}, 0.0});
        break;
      case ContactKind::Environment:
        lin.push_back({{{fz, -1.0}}, 0.0});
        break;
      case ContactKind::Suction: {
        const double s3 = std::sqrt(3.0), s2 = std::sqrt(2.0);
        for (int comp : {0, 1})
          for (double sg : {1.0, -1.0}) lin.push_back({{{ix[comp], sg * s3}, {fz, -c.mu}}, 0.0});
        for (double sg : {1.0, -1.0}) lin.push_back({{{ix[5], sg * s3}, {fz, -c.pad_radius * c.mu}}, 0.0});
        for (int comp : {3, 4})
          for (double sg : {1.0, -1.0}) lin.push_back({{{ix[comp], sg * s2}}, kPi * c.pad_radius * c.kappa});
        lin.push_back({{{fz, -1.0}}, 0.0});
        lin.push_back({{{fz, 1.0}, {v_s, -1.0}}, 0.0});
        break;
      }
    }
    if (c.kind != ContactKind::Suction && ix[0] >= 0) {
      std::vector<std::pair<int, double>> cone{{fz, c.mu}, {ix[0], 1.0}, {ix[1], 1.0}};
      if (c.kind == ContactKind::GripFinger) cone.push_back({ix[5], 1.0 / c.epsilon});
      socs.push_back(cone);
    }
  }
  if (v_gp >= 0) {
    lin.push_back({{{v_gp, -1.0}}, 0.0});
    lin.push_back({{{v_gp, 1.0}}, limits.hand_payload});
  }
  if (v_s >= 0) {
    lin.push_back({{{v_s, -1.0}}, 0.0});
    lin.push_back({{{v_s, 1.0}}, limits.suction_max});
  }

  ConeProgram pr;
  pr.dims.l = static_cast<int>(lin.size());
  for (const auto& s : socs) pr.dims.q.push_back(static_cast<int>(s.size()));
  const int m = pr.dims.size();
  pr.G = MatrixXd::Zero(m, nv);
  pr.h = VectorXd::Zero(m);
  int r = 0;
  for (const auto& row : lin) {
    for (const auto& [j, v] : row.coef) pr.G(r, j) += v;
    pr.h[r++] = row.h;
  }
  for (const auto& cone : socs)
    for (const auto& [j, v] : cone) pr.G(r++, j) = -v;
  pr.c = VectorXd::Zero(nv);
  if (v_gp >= 0) pr.c[v_gp] = weights.k_gp;
  if (v_s >= 0) pr.c[v_s] = weights.k_s;
  pr.A = MatrixXd::Zero(6, nv);
  for (std::size_t i = 0; i < nc; ++i)
    for (int comp = 0; comp < 6; ++comp)
      if (index[i][comp] >= 0) pr.A.col(index[i][comp]) = sys.G.col(6 * static_cast<int>(i) + comp);
  pr.b = b;

  const ConeSolution cs = solve_cone_program(pr, settings);
  out.status = cs.status;
  out.iterations = cs.iterations;
  if (cs.status != SolverStatus::Optimal) return out;
  for (std::size_t i = 0; i < nc; ++i)
    for (int comp = 0; comp < 6; ++comp)
      if (index[i][comp] >= 0) out.wrenches[i][comp] = cs.x[index[i][comp]];
  out.f_gp_plus = v_gp >= 0 ? cs.x[v_gp] : 0.0;
  out.f_s_plus = v_s >= 0 ? cs.x[v_s] : 0.0;
  out.objective = weights.k_gp * out.f_gp_plus + weights.k_s * out.f_s_plus;
  VectorXd F(6 * nc);
  for (std::size_t i = 0; i < nc; ++i) F.segment<6>(6 * i) = out.wrenches[i];
  out.residual = nc ? (sys.G * F + sys.omega_g).cwiseAbs().maxCoeff() : sys.omega_g.cwiseAbs().maxCoeff();
  return out;
}

ResidualReport verify_solution(const ForceSystem& sys, const ForceSolution& sol, const ForceLimits& limits) {
  ResidualReport rep;
  const std::size_t nc = sys.contacts.size();
  VectorXd total = sys.omega_g;
  for (std::size_t i = 0; i < nc && i < sol.wrenches.size(); ++i) total += grasp_map(sys.contacts[i].frame) * sol.wrenches[i];
  rep.equilibrium_residual = total.cwiseAbs().maxCoeff();
  if (sol.wrenches.size() != nc) rep.equilibrium_residual = std::max(rep.equilibrium_residual, 1e300);

  rep.worst_cone_margin = std::numeric_limits<double>::infinity();
  auto check = [&](double margin, const std::string& what) {
    if (margin < rep.worst_cone_margin) {
      rep.worst_cone_margin = margin;
      rep.worst_constraint = what;
    }
  };
  check(sol.f_gp_plus, "f_gp+ >= 0");
  check(limits.hand_payload - sol.f_gp_plus, "f_gp+ <= payload");
  check(sol.f_s_plus, "f_s+ >= 0");
  check(limits.suction_max - sol.f_s_plus, "f_s+ <= suction max");
  for (std::size_t i = 0; i < nc && i < sol.wrenches.size(); ++i) {
    const auto& c = sys.contacts[i];
    const Vec6& w = sol.wrenches[i];
    const std::string tag = c.label.empty() ? to_string(c.kind) + std::to_string(i) : c.label;
    const double fz = w[2];
    switch (c.kind) {
      case ContactKind::GripFinger:
        check(-std::abs(w[3]) - std::abs(w[4]), tag + " zero tau_x,tau_y");
        check(c.mu * fz - std::sqrt(w[0] * w[0] + w[1] * w[1] + w[5] * w[5] / (c.epsilon * c.epsilon)),
              tag + " soft-finger cone");
        check(fz, tag + " f_z >= 0");
        check(sol.f_gp_plus - fz, tag + " f_z <= f_gp+");
        break;
      case ContactKind::Push:
      case ContactKind::Environment:
        check(-w.tail<3>().cwiseAbs().sum(), tag + " zero torque");
        check(c.mu * fz - std::hypot(w[0], w[1]), tag + " friction cone");
        check(fz, tag + " f_z >= 0");
        if (c.kind == ContactKind::Push) check(sol.f_gp_plus - fz, tag + " f_z <= f_gp+");
        break;
      case ContactKind::Suction: {
        const double s3 = std::sqrt(3.0), s2 = std::sqrt(2.0);
        check(c.mu * fz - s3 * std::abs(w[0]), tag + " limit surface x");
        check(c.mu * fz - s3 * std::abs(w[1]), tag + " limit surface y");
        check(c.pad_radius * c.mu * fz - s3 * std::abs(w[5]), tag + " limit surface torsion");
        check(kPi * c.pad_radius * c.kappa - s2 * std::abs(w[3]), tag + " material torque x");
        check(kPi * c.pad_radius * c.kappa - s2 * std::abs(w[4]), tag + " material torque y");
        check(fz, tag + " f_s >= 0");
        check(sol.f_s_plus - fz, tag + " f_s <= f_s+");
        break;
      }
    }
  }
  return rep;
}

Vec6 resultant_wrench(const ForceSystem& sys, const ForceSolution& sol, ContactKind kind, const Vec3& com,
                      const Vec3& point) {
  Vec6 out = Vec6::Zero();
  for (std::size_t i = 0; i < sys.contacts.size() && i < sol.wrenches.size(); ++i) {
    const auto& c = sys.contacts[i];
    if (c.kind != kind) continue;
    const Vec3 f = c.frame.rotation * sol.wrenches[i].head<3>();
    const Vec3 t = c.frame.rotation * sol.wrenches[i].tail<3>();
    const Vec3 r = com + c.frame.translation - point;
    out.head<3>() += f;
    out.tail<3>() += t + r.cross(f);
  }
  return out;
}

}  // namespace platelift
