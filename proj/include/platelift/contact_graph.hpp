#pragma once

#include "platelift/geometry.hpp"

#include <json.hpp>

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace platelift {

/// Environment elements. The support is a single unbounded plane, so its
/// face is the only element.
enum class EnvElement { None, SupportFace };

/// Contact state <x_p - y_t> between a bottom element of the plate and the
/// support face, or "No Contact".
struct PrincipalContact {
  int plate_element = -1;
  EnvElement env = EnvElement::None;

  static PrincipalContact no_contact() { return {}; }
  static PrincipalContact on_support(int element) { return {element, EnvElement::SupportFace}; }

  bool is_none() const { return env == EnvElement::None; }
  ElementKind kind() const;
  std::string label() const;
  /// Inverse of label(); throws std::invalid_argument for unknown names.
  static PrincipalContact parse(const std::string& text);

  friend bool operator==(const PrincipalContact&, const PrincipalContact&) = default;
};

std::string element_label(int element_id);

/// Horizontal support plane (table or riser top) at a given height.
struct SupportPlane {
  double height = 0.0;
};

class InvalidPoseError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// True iff pc_j is a relaxation neighbour of pc_i:
/// (c bounds a AND d == b) OR (c == a AND d bounds b) OR (c bounds a AND d bounds b).
bool inclusion_related(const std::vector<SurfaceElement>& elements, const PrincipalContact& pc_i,
                       const PrincipalContact& pc_j);

struct ContactStateGraph {
  std::vector<SurfaceElement> elements;
  std::vector<PrincipalContact> nodes;
  std::vector<std::pair<int, int>> edges;
  std::vector<std::vector<int>> adjacency;

  int index_of(const PrincipalContact& pc) const;
  bool adjacent(int a, int b) const;
};

/// Face, four edges, four vertices and No Contact; inclusion edges plus an
/// edge from every PC to No Contact.
ContactStateGraph build_csg(const PlateModel& plate);

/// World positions of the plate vertices realizing `pc` (empty for No Contact).
std::vector<Vec3> contact_points(const PlateModel& plate, const Pose& pose, const PrincipalContact& pc);

/// Maps a plate pose onto the PC whose element set touches the plane.
/// Throws InvalidPoseError on penetration or on contact by a non-bottom element.
PrincipalContact classify_contact(const PlateModel& plate, const Pose& pose, const SupportPlane& support,
                                  double tolerance = 1e-6);

struct SamplingParams {
  /// Planar offsets (m) of face samples relative to the anchor.
  std::vector<Vec2> face_offsets{Vec2::Zero()};
  /// Extra yaw (deg) of face samples about the vertical through the plate center.
  std::vector<double> face_yaws_deg{0.0};
  /// Tilt sweep about each bottom edge, applied to every face sample.
  std::vector<double> edge_tilts_deg{10, 20, 30, 40, 50, 60, 70, 80};
  /// Two tilt angles about the edges meeting at each vertex.
  std::vector<std::array<double, 2>> vertex_tilts_deg{{10, 10}, {20, 20}};
  /// No-Contact samples: lift heights above the support and planar offsets.
  std::vector<double> none_heights{0.05, 0.10};
  std::vector<Vec2> none_offsets{Vec2::Zero()};
  double com_threshold = 0.10;
  double contact_tolerance = 1e-6;

  /// Throws std::invalid_argument when any PC would receive no samples or the
  /// threshold is not positive.
  void validate() const;
};

void to_json(nlohmann::json& j, const SamplingParams& p);
void from_json(const nlohmann::json& j, SamplingParams& p);

struct ContactNode {
  int id = 0;
  PrincipalContact pc;
  Pose pose;
  Vec3 com = Vec3::Zero();
};

struct DcsgEdge {
  int a = 0;
  int b = 0;
  bool intra = true;
};

struct DCSG {
  std::vector<ContactNode> nodes;
  std::vector<DcsgEdge> edges;
  std::vector<std::vector<int>> adjacency;
  SamplingParams params;
  SupportPlane support;

  std::size_t intra_edge_count() const;
  std::size_t inter_edge_count() const;
  /// Node whose pose equals `pose` (within tolerance), or -1.
  int find_pose(const Pose& pose, double tol = 1e-9) const;
};

/// Densely samples every PC around the anchor pose. The anchor itself is
/// always a node. Throws std::invalid_argument for invalid params.
DCSG sample_dcsg(const ContactStateGraph& csg, const PlateModel& plate, const SupportPlane& support,
                 const Pose& anchor, const SamplingParams& params);

/// True when the two nodes may be joined by an inter-PC edge.
bool pose_compatible(const ContactStateGraph& csg, const PlateModel& plate, const ContactNode& a,
                     const ContactNode& b, double tolerance);

nlohmann::json dcsg_to_json(const DCSG& dcsg);
/// Graphviz description (node id, PC label, pose).
std::string dcsg_to_dot(const DCSG& dcsg);

}  // namespace platelift
