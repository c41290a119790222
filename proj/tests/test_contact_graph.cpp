#include "platelift/contact_graph.hpp"

#include <doctest.h>

#include <chrono>
#include <functional>
#include <map>
#include <numeric>
#include <set>

using namespace platelift;

namespace {

const PlateModel kAB{0.3, 0.3, 0.04, 4.0, Vec3::Zero()};
const Pose kFlat = Pose::from_translation(Vec3(0, 0, 0.02));

PrincipalContact pc_of(const std::string& s) { return PrincipalContact::parse(s); }

SamplingParams single_samples() {
  SamplingParams p;
  p.edge_tilts_deg = {30};
  p.vertex_tilts_deg = {{20, 20}};
  p.none_heights = {0.1};
  p.com_threshold = 1e9;
  return p;
}

int components(int n, const std::vector<std::pair<int, int>>& edges) {
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  for (auto [a, b] : edges) parent[find(a)] = find(b);
  int c = 0;
  for (int i = 0; i < n; ++i) c += find(i) == i;
  return c;
}

}  // namespace

TEST_CASE("csg structure") {
  const auto t0 = std::chrono::steady_clock::now();
  const auto csg = build_csg(kAB);
  CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() < 1.0);
  REQUIRE(csg.nodes.size() == 10);
  CHECK(csg.edges.size() == 21);
  const int face = csg.index_of(pc_of("<f_p-f_t>"));
  const int none = csg.index_of(PrincipalContact::no_contact());
  int face_degree = 0;
  for (int v : csg.adjacency[face]) face_degree += v != none;
  CHECK(face_degree == 4);
  for (int e = 1; e <= 4; ++e) {
    const int ei = csg.index_of(PrincipalContact::on_support(e));
    int vertices = 0;
    for (int v : csg.adjacency[ei]) vertices += csg.nodes[v].kind() == ElementKind::Vertex;
    CHECK(vertices == 2);
    CHECK(csg.adjacent(ei, face));
  }
  for (int i = 0; i < 10; ++i)
    if (i != none) CHECK(csg.adjacent(i, none));
}

TEST_CASE("pc labels round trip") {
  const auto csg = build_csg(kAB);
  for (const auto& pc : csg.nodes) CHECK(PrincipalContact::parse(pc.label()) == pc);
  CHECK(PrincipalContact::no_contact().label() == "No Contact");
  CHECK_THROWS_AS(PrincipalContact::parse("<x9_p-f_t>"), std::invalid_argument);
}

TEST_CASE("inclusion relation examples") {
  const auto el = bottom_elements(kAB);
  CHECK(inclusion_related(el, pc_of("<f_p-f_t>"), pc_of("<e1_p-f_t>")));
  CHECK_FALSE(inclusion_related(el, pc_of("<e1_p-f_t>"), pc_of("<e2_p-f_t>")));
  CHECK(inclusion_related(el, pc_of("<e1_p-f_t>"), pc_of("<v1_p-f_t>")));
  CHECK_FALSE(inclusion_related(el, pc_of("<f_p-f_t>"), pc_of("<v1_p-f_t>")));
}

TEST_CASE("inclusion relation is irreflexive and never joins elements of one kind") {
  const auto csg = build_csg(kAB);
  for (const auto& a : csg.nodes)
    for (const auto& b : csg.nodes) {
      if (a.is_none() || b.is_none()) continue;
      if (a == b) CHECK_FALSE(inclusion_related(csg.elements, a, b));
      if (a.kind() == b.kind()) CHECK_FALSE(inclusion_related(csg.elements, a, b));
    }
}

TEST_CASE("classify contact examples") {
  const SupportPlane table{0.0};
  CHECK(classify_contact(kAB, kFlat, table) == pc_of("<f_p-f_t>"));
  // tilt 20 degrees about e1 (y = -w/2 on the bottom)
  const auto el = bottom_elements(kAB);
  const auto& e1 = el[kFirstEdge];
  const Pose tilt = rotation_about_line(kFlat * e1.vertices[0], Vec3::UnitX(), deg2rad(20)) * kFlat;
  CHECK(classify_contact(kAB, tilt, table) == pc_of("<e1_p-f_t>"));
  CHECK(classify_contact(kAB, Pose::from_translation(Vec3(0, 0, 0.07)), table).is_none());
  CHECK_THROWS_AS(classify_contact(kAB, Pose::from_translation(Vec3(0, 0, 0.01)), table), InvalidPoseError);
  // resting on a riser
  CHECK(classify_contact(kAB, Pose::from_translation(Vec3(0, 0, 0.05)), SupportPlane{0.03}) == pc_of("<f_p-f_t>"));
}

TEST_CASE("single sample per pc gives a copy of the csg") {
  const auto csg = build_csg(kAB);
  const auto dcsg = sample_dcsg(csg, kAB, {0.0}, kFlat, single_samples());
  REQUIRE(dcsg.nodes.size() == 10);
  CHECK(dcsg.edges.size() == csg.edges.size());
  std::set<std::pair<int, int>> a, b;
  for (const auto& e : dcsg.edges) {
    const int u = csg.index_of(dcsg.nodes[e.a].pc), v = csg.index_of(dcsg.nodes[e.b].pc);
    a.insert({std::min(u, v), std::max(u, v)});
  }
  for (auto [u, v] : csg.edges) b.insert({std::min(u, v), std::max(u, v)});
  CHECK(a == b);
}

TEST_CASE("face grid with threshold one step gives the 4-neighbour grid") {
  auto p = single_samples();
  const double step = 0.05;
  p.face_offsets.clear();
  for (int i = -1; i <= 1; ++i)
    for (int j = -1; j <= 1; ++j) p.face_offsets.push_back(Vec2(i * step, j * step));
  p.com_threshold = step;
  const auto dcsg = sample_dcsg(build_csg(kAB), kAB, {0.0}, kFlat, p);
  int face_nodes = 0, face_edges = 0;
  for (const auto& n : dcsg.nodes) face_nodes += n.pc == pc_of("<f_p-f_t>");
  for (const auto& e : dcsg.edges)
    face_edges += e.intra && dcsg.nodes[e.a].pc == pc_of("<f_p-f_t>");
  CHECK(face_nodes == 9);
  CHECK(face_edges == 12);
}

TEST_CASE("every sampled pose classifies as its own pc") {
  SamplingParams p;
  p.face_yaws_deg = {0, 15};
  p.face_offsets = {Vec2::Zero(), Vec2(0.05, 0.0)};
  p.none_heights = {0.05, 0.1};
  const auto dcsg = sample_dcsg(build_csg(kAB), kAB, {0.0}, kFlat, p);
  CHECK(dcsg.find_pose(kFlat) >= 0);
  for (const auto& n : dcsg.nodes) {
    CHECK(classify_contact(kAB, n.pose, dcsg.support) == n.pc);
    CHECK((n.com - n.pose * kAB.com_offset).norm() < 1e-12);
  }
  for (const auto& e : dcsg.edges) {
    const auto& a = dcsg.nodes[e.a];
    const auto& b = dcsg.nodes[e.b];
    if (e.intra) {
      CHECK(a.pc == b.pc);
      CHECK((a.com - b.com).norm() <= p.com_threshold + 1e-12);
    } else {
      CHECK(a.pc != b.pc);
    }
  }
}

TEST_CASE("no contact is never a bridge inside a pc") {
  SamplingParams p;
  p.none_heights = {0.05, 0.1};
  p.face_offsets = {Vec2::Zero(), Vec2(0.05, 0.0), Vec2(0.1, 0.0)};
  const auto dcsg = sample_dcsg(build_csg(kAB), kAB, {0.0}, kFlat, p);
  for (const auto& e : dcsg.edges)
    if (e.intra) CHECK(dcsg.nodes[e.a].pc.is_none() == dcsg.nodes[e.b].pc.is_none());

  // with the No-Contact nodes deleted every PC stays in one piece
  std::map<std::string, std::vector<int>> by_pc;
  for (const auto& n : dcsg.nodes)
    if (!n.pc.is_none()) by_pc[n.pc.label()].push_back(n.id);
  for (const auto& [label, ids] : by_pc) {
    std::map<int, int> local;
    for (int id : ids) local[id] = static_cast<int>(local.size());
    std::vector<std::pair<int, int>> kept;
    for (const auto& e : dcsg.edges)
      if (local.count(e.a) && local.count(e.b)) kept.push_back({local[e.a], local[e.b]});
    CAPTURE(label);
    CHECK(components(static_cast<int>(ids.size()), kept) == 1);
  }
}

TEST_CASE("sampling params validation") {
  SamplingParams p;
  p.edge_tilts_deg.clear();
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = {};
  p.com_threshold = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("dcsg exports") {
  const auto dcsg = sample_dcsg(build_csg(kAB), kAB, {0.0}, kFlat, single_samples());
  const auto j = dcsg_to_json(dcsg);
  CHECK(j.at("nodes").size() == 10);
  const auto dot = dcsg_to_dot(dcsg);
  CHECK(dot.find("No Contact") != std::string::npos);
}
