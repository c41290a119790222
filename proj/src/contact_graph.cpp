#include "platelift/contact_graph.hpp"

#include "platelift/json_io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace platelift {

using nlohmann::json;

std::string element_label(int id) {
  if (id == kBottomFace) return "f";
  if (id >= kFirstEdge && id < kFirstVertex) return "e" + std::to_string(id - kFirstEdge + 1);
  if (id >= kFirstVertex && id < kBottomElementCount) return "v" + std::to_string(id - kFirstVertex + 1);
  return "?";
}

ElementKind PrincipalContact::kind() const {
  if (plate_element == kBottomFace) return ElementKind::Face;
  if (plate_element < kFirstVertex) return ElementKind::Edge;
  return ElementKind::Vertex;
}

std::string PrincipalContact::label() const {
  if (is_none()) return "No Contact";
  return "<" + element_label(plate_element) + "_p-f_t>";
}

PrincipalContact PrincipalContact::parse(const std::string& text) {
  if (text == "No Contact" || text == "none" || text == "NONE" || text == "no-contact") return no_contact();
  std::string name = text;
  if (name.size() > 8 && name.front() == '<' && name.ends_with("_p-f_t>")) name = name.substr(1, name.size() - 8);
  for (int id = 0; id < kBottomElementCount; ++id)
    if (element_label(id) == name) return on_support(id);
  throw std::invalid_argument("unknown contact state '" + text + "'");
}

bool inclusion_related(const std::vector<SurfaceElement>& elements, const PrincipalContact& pc_i,
                       const PrincipalContact& pc_j) {
  if (pc_i.is_none() || pc_j.is_none()) return false;
  const int a = pc_i.plate_element, c = pc_j.plate_element;
  const bool c_bounds_a = bounds(elements, c, a);
  const bool c_equals_a = c == a;
  // The support face is unbounded: it has no boundary elements.
  const bool d_equals_b = pc_i.env == pc_j.env;
  const bool d_bounds_b = false;
  return (c_bounds_a && d_equals_b) || (c_equals_a && d_bounds_b) || (c_bounds_a && d_bounds_b);
}

int ContactStateGraph::index_of(const PrincipalContact& pc) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i] == pc) return static_cast<int>(i);
  return -1;
}

bool ContactStateGraph::adjacent(int a, int b) const {
  const auto& adj = adjacency.at(static_cast<std::size_t>(a));
  return std::find(adj.begin(), adj.end(), b) != adj.end();
}

ContactStateGraph build_csg(const PlateModel& plate) {
  ContactStateGraph g;
  g.elements = bottom_elements(plate);
  for (int id = 0; id < kBottomElementCount; ++id) g.nodes.push_back(PrincipalContact::on_support(id));
  g.nodes.push_back(PrincipalContact::no_contact());
  const int n = static_cast<int>(g.nodes.size());
  const int none = n - 1;
  for (int i = 0; i < none; ++i)
    for (int j = i + 1; j < none; ++j)
      if (inclusion_related(g.elements, g.nodes[i], g.nodes[j]) ||
          inclusion_related(g.elements, g.nodes[j], g.nodes[i]))
        g.edges.emplace_back(i, j);
  for (int i = 0; i < none; ++i) g.edges.emplace_back(i, none);
  g.adjacency.assign(static_cast<std::size_t>(n), {});
  for (auto [a, b] : g.edges) {
    g.adjacency[a].push_back(b);
    g.adjacency[b].push_back(a);
  }
  return g;
}

std::vector<Vec3> contact_points(const PlateModel& plate, const Pose& pose, const PrincipalContact& pc) {
  if (pc.is_none()) return {};
  const auto elements = bottom_elements(plate);
  std::vector<Vec3> out;
  for (const auto& v : elements.at(static_cast<std::size_t>(pc.plate_element)).vertices) out.push_back(pose * v);
  return out;
}

PrincipalContact classify_contact(const PlateModel& plate, const Pose& pose, const SupportPlane& support,
                                  double tolerance) {
  const auto corners = plate.corners();
  std::vector<int> touching;
  for (int i = 0; i < 8; ++i) {
    const double z = (pose * corners[i]).z() - support.height;
    if (z < -tolerance) throw InvalidPoseError("invalid initial pose: plate penetrates the support");
    if (z <= tolerance) {
      if (i >= 4) throw InvalidPoseError("invalid initial pose: a non-bottom element touches the support");
      touching.push_back(i);
    }
  }
  switch (touching.size()) {
    case 0: return PrincipalContact::no_contact();
    case 1: return PrincipalContact::on_support(kFirstVertex + touching[0]);
    case 2: {
      const int a = touching[0], b = touching[1];
      if (b == a + 1) return PrincipalContact::on_support(kFirstEdge + a);
      if (a == 0 && b == 3) return PrincipalContact::on_support(kFirstEdge + 3);
      throw InvalidPoseError("invalid initial pose: diagonal vertices touch without the face");
    }
    default: return PrincipalContact::on_support(kBottomFace);
  }
}

void SamplingParams::validate() const {
  if (face_offsets.empty() || face_yaws_deg.empty())
    throw std::invalid_argument("sampling: the face PC needs at least one sample");
  if (edge_tilts_deg.empty()) throw std::invalid_argument("sampling: edge PCs need at least one tilt");
  if (vertex_tilts_deg.empty()) throw std::invalid_argument("sampling: vertex PCs need at least one tilt pair");
  if (none_heights.empty() || none_offsets.empty())
    throw std::invalid_argument("sampling: the No-Contact PC needs at least one sample");
  for (double t : edge_tilts_deg)
    if (!(t > 0.0 && t < 90.0)) throw std::invalid_argument("sampling: edge tilts must lie in (0, 90) deg");
  for (const auto& t : vertex_tilts_deg)
    if (!(t[0] > 0.0 && t[1] > 0.0 && t[0] < 90.0 && t[1] < 90.0))
      throw std::invalid_argument("sampling: vertex tilts must lie in (0, 90) deg");
  for (double h : none_heights)
    if (!(h > 0.0)) throw std::invalid_argument("sampling: No-Contact heights must be positive");
  if (!(com_threshold > 0.0)) throw std::invalid_argument("sampling: CoM threshold must be positive");
  if (!(contact_tolerance > 0.0)) throw std::invalid_argument("sampling: contact tolerance must be positive");
}

void to_json(json& j, const SamplingParams& p) {
  json fo = json::array(), no = json::array(), vt = json::array();
  for (const auto& o : p.face_offsets) fo.push_back(vec_to_json(o));
  for (const auto& o : p.none_offsets) no.push_back(vec_to_json(o));
  for (const auto& t : p.vertex_tilts_deg) vt.push_back({t[0], t[1]});
  j = {{"face_offsets_m", fo},          {"face_yaws_deg", p.face_yaws_deg},
       {"edge_tilts_deg", p.edge_tilts_deg}, {"vertex_tilts_deg", vt},
       {"none_heights_m", p.none_heights},   {"none_offsets_m", no},
       {"com_threshold_m", p.com_threshold}, {"contact_tolerance_m", p.contact_tolerance}};
}

void from_json(const json& j, SamplingParams& p) {
  if (j.contains("face_offsets_m")) {
    p.face_offsets.clear();
    for (const auto& o : j.at("face_offsets_m")) p.face_offsets.push_back(vec2_from_json(o));
  }
  if (j.contains("face_yaws_deg")) p.face_yaws_deg = j.at("face_yaws_deg").get<std::vector<double>>();
  if (j.contains("edge_tilts_deg")) p.edge_tilts_deg = j.at("edge_tilts_deg").get<std::vector<double>>();
  if (j.contains("vertex_tilts_deg")) {
    p.vertex_tilts_deg.clear();
    for (const auto& t : j.at("vertex_tilts_deg")) p.vertex_tilts_deg.push_back({t.at(0).get<double>(), t.at(1).get<double>()});
  }
  if (j.contains("none_heights_m")) p.none_heights = j.at("none_heights_m").get<std::vector<double>>();
  if (j.contains("none_offsets_m")) {
    p.none_offsets.clear();
    for (const auto& o : j.at("none_offsets_m")) p.none_offsets.push_back(vec2_from_json(o));
  }
  if (j.contains("com_threshold_m")) p.com_threshold = j.at("com_threshold_m").get<double>();
  if (j.contains("contact_tolerance_m")) p.contact_tolerance = j.at("contact_tolerance_m").get<double>();
}

std::size_t DCSG::intra_edge_count() const {
  return static_cast<std::size_t>(std::count_if(edges.begin(), edges.end(), [](const DcsgEdge& e) { return e.intra; }));
}

std::size_t DCSG::inter_edge_count() const { return edges.size() - intra_edge_count(); }

int DCSG::find_pose(const Pose& pose, double tol) const {
  for (const auto& n : nodes)
    if ((n.pose.translation - pose.translation).cwiseAbs().maxCoeff() <= tol &&
        (n.pose.rotation - pose.rotation).cwiseAbs().maxCoeff() <= tol)
      return n.id;
  return -1;
}

namespace {

// Rotation about a line through `point` with direction `axis`, signed so
// that the plate center rises.
Pose lifting_rotation(const Pose& base, const Vec3& point, Vec3 axis, double angle) {
  const Vec3 center = base.translation;
  const Vec3 arm = center - point;
  // Rotating by +angle about +axis moves `center` along axis x arm.
  if (axis.cross(arm).z() < 0.0) axis = -axis;
  return rotation_about_line(point, axis, angle) * base;
}

double yaw_of(const Pose& pose) {
  const Vec3 x = pose.rotation.col(0);
  return std::atan2(x.y(), x.x());
}

}  // namespace

bool pose_compatible(const ContactStateGraph& csg, const PlateModel& plate, const ContactNode& a,
                     const ContactNode& b, double tolerance) {
  if (a.pc.is_none() || b.pc.is_none()) return true;
  int shared = -1;
  if (inclusion_related(csg.elements, a.pc, b.pc))
    shared = b.pc.plate_element;
  else if (inclusion_related(csg.elements, b.pc, a.pc))
    shared = a.pc.plate_element;
  else
    return false;
  (void)plate;
  for (const auto& v : csg.elements.at(static_cast<std::size_t>(shared)).vertices)
    if ((a.pose * v - b.pose * v).norm() > tolerance) return false;
  return true;
}

DCSG sample_dcsg(const ContactStateGraph& csg, const PlateModel& plate, const SupportPlane& support,
                 const Pose& anchor, const SamplingParams& params) {
  params.validate();
  const double tol = params.contact_tolerance;
  DCSG g;
  g.params = params;
  g.support = support;

  auto add_node = [&](const Pose& pose, const PrincipalContact& expected) {
    PrincipalContact pc;
    try {
      pc = classify_contact(plate, pose, support, tol);
    } catch (const InvalidPoseError&) {
      return;
    }
    if (!(pc == expected)) return;
    ContactNode n;
    n.id = static_cast<int>(g.nodes.size());
    n.pc = pc;
    n.pose = pose;
    n.com = pose * plate.com_offset;
    g.nodes.push_back(n);
  };

  // Flat base pose resting on the support at the anchor's position and yaw.
  const PrincipalContact anchor_pc = classify_contact(plate, anchor, support, tol);
  Pose base;
  if (anchor_pc.kind() == ElementKind::Face && !anchor_pc.is_none()) {
    base = anchor;
  } else {
    base = Pose::from_rpy({anchor.translation.x(), anchor.translation.y(), support.height + plate.half_height()},
                          0.0, 0.0, yaw_of(anchor));
  }

  std::vector<Pose> face_poses;
  for (double yaw : params.face_yaws_deg)
    for (const auto& off : params.face_offsets) {
      const Pose spin = rotation_about_line(base.translation, Vec3::UnitZ(), deg2rad(yaw));
      face_poses.push_back(Pose::from_translation({off.x(), off.y(), 0.0}) * spin * base);
    }

  const PrincipalContact face_pc = PrincipalContact::on_support(kBottomFace);
  for (const auto& p : face_poses) add_node(p, face_pc);

  for (int e = 0; e < 4; ++e) {
    const int id = kFirstEdge + e;
    const auto& verts = csg.elements[static_cast<std::size_t>(id)].vertices;
    for (const auto& fp : face_poses)
      for (double tilt : params.edge_tilts_deg) {
        const Vec3 a = fp * verts[0], b = fp * verts[1];
        add_node(lifting_rotation(fp, a, b - a, deg2rad(tilt)), PrincipalContact::on_support(id));
      }
  }

  for (int v = 0; v < 4; ++v) {
    const int id = kFirstVertex + v;
    const Vec3 corner = csg.elements[static_cast<std::size_t>(id)].vertices[0];
    const Vec3 prev = csg.elements[static_cast<std::size_t>(kFirstVertex + (v + 3) % 4)].vertices[0];
    const Vec3 next = csg.elements[static_cast<std::size_t>(kFirstVertex + (v + 1) % 4)].vertices[0];
    for (const auto& fp : face_poses)
      for (const auto& tilts : params.vertex_tilts_deg) {
        const Vec3 p = fp * corner;
        const Vec3 d1 = fp.rotate(next - corner), d2 = fp.rotate(prev - corner);
        const Pose first = lifting_rotation(fp, p, d2, deg2rad(tilts[1]));
        add_node(lifting_rotation(first, p, d1, deg2rad(tilts[0])), PrincipalContact::on_support(id));
      }
  }

  for (double h : params.none_heights)
    for (const auto& off : params.none_offsets)
      add_node(Pose::from_translation({off.x(), off.y(), h}) * base, PrincipalContact::no_contact());

  if (g.find_pose(anchor, 1e-9) < 0) add_node(anchor, anchor_pc);

  // Every PC must be represented.
  for (const auto& pc : csg.nodes) {
    const bool present = std::any_of(g.nodes.begin(), g.nodes.end(), [&](const ContactNode& n) { return n.pc == pc; });
    if (!present) throw std::invalid_argument("sampling produced no nodes for " + pc.label());
  }

  const int n = static_cast<int>(g.nodes.size());
  g.adjacency.assign(static_cast<std::size_t>(n), {});
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const auto& a = g.nodes[i];
      const auto& b = g.nodes[j];
      bool connect = false, intra = false;
      if (a.pc == b.pc) {
        intra = true;
        connect = (a.com - b.com).norm() <= params.com_threshold + 1e-12;
      } else {
        const int ia = csg.index_of(a.pc), ib = csg.index_of(b.pc);
        connect = csg.adjacent(ia, ib) && pose_compatible(csg, plate, a, b, tol);
      }
      if (!connect) continue;
      g.edges.push_back({i, j, intra});
      g.adjacency[i].push_back(j);
      g.adjacency[j].push_back(i);
    }
  return g;
}

json dcsg_to_json(const DCSG& g) {
  json nodes = json::array(), edges = json::array();
  for (const auto& n : g.nodes) {
    json pj = pose_to_json(n.pose);
    nodes.push_back({{"id", n.id}, {"pc", n.pc.label()}, {"pose", pj}, {"com", vec_to_json(n.com)}});
  }
  for (const auto& e : g.edges) edges.push_back({{"a", e.a}, {"b", e.b}, {"kind", e.intra ? "intra" : "inter"}});
  return {{"nodes", nodes}, {"edges", edges}, {"params", g.params}, {"support_height_m", g.support.height}};
}

std::string dcsg_to_dot(const DCSG& g) {
  std::ostringstream out;
  out << "graph dcsg {\n";
  for (const auto& n : g.nodes) {
    const auto q = n.pose.quaternion_wxyz();
    out << "  n" << n.id << " [label=\"" << n.id << " " << n.pc.label() << "\\n(" << n.pose.translation.x() << ", "
        << n.pose.translation.y() << ", " << n.pose.translation.z() << ") q(" << q[0] << ", " << q[1] << ", " << q[2]
        << ", " << q[3] << ")\"];\n";
  }
  for (const auto& e : g.edges)
    out << "  n" << e.a << " -- n" << e.b << (e.intra ? "" : " [style=dashed]") << ";\n";
  out << "}\n";
  return out.str();
}

}  // namespace platelift
