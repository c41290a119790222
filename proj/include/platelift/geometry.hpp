#pragma once

#include <Eigen/Dense>

#include <array>
#include <string>
#include <vector>

namespace platelift {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }

/// Rigid transform. Maps points from the child frame into the parent frame.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }
  static Pose from_translation(const Vec3& t);
  /// Rotation about a unit axis through the origin.
  static Pose from_axis_angle(const Vec3& axis, double angle);
  /// Fixed-axis roll/pitch/yaw (R = Rz(yaw) Ry(pitch) Rx(roll)).
  static Pose from_rpy(const Vec3& xyz, double roll, double pitch, double yaw);
  /// Quaternion given as (w, x, y, z); normalized internally.
  static Pose from_quaternion(const Vec3& xyz, const Eigen::Vector4d& wxyz);

  Pose operator*(const Pose& other) const;
  Vec3 operator*(const Vec3& point) const { return rotation * point + translation; }
  Vec3 rotate(const Vec3& v) const { return rotation * v; }
  Pose inverse() const;

  Eigen::Vector4d quaternion_wxyz() const;

  /// Orthonormal with det +1 within `tol`.
  bool is_valid(double tol = 1e-9) const;
};

/// Rotation of `angle` about the line through `point` with direction `axis`.
Pose rotation_about_line(const Vec3& point, const Vec3& axis, double angle);

/// Cross-product matrix: skew(p) * v == p.cross(v).
Mat3 skew(const Vec3& p);

/// Completes a unit z axis into a right-handed rotation (columns x, y, z).
Mat3 frame_from_z(const Vec3& z);

/// Rigid rectangular plate. Frame origin at the geometric center, x along
/// the length, y along the width, z along the thickness.
struct PlateModel {
  double length = 0.0;
  double width = 0.0;
  double height = 0.0;
  double mass = 0.0;
  Vec3 com_offset = Vec3::Zero();

  /// Throws std::invalid_argument when dimensions/mass are not positive or
  /// the center of mass leaves the bounding box.
  void validate() const;

  /// Eight box corners: indices 0..3 bottom (counter-clockwise seen from
  /// above, starting at (-l/2,-w/2)), 4..7 the top corners above them.
  std::array<Vec3, 8> corners() const;
  double half_height() const { return 0.5 * height; }
};

enum class ElementKind { Face, Edge, Vertex };

std::string to_string(ElementKind kind);

struct SurfaceElement {
  ElementKind kind = ElementKind::Face;
  int id = 0;
  std::string label;
  std::vector<Vec3> vertices;
  Vec3 normal = Vec3::UnitZ();
  /// Ids of the elements bounding this one (face -> edges, edge -> vertices).
  std::vector<int> boundary;
};

// Bottom-surface element ids.
constexpr int kBottomFace = 0;
constexpr int kFirstEdge = 1;
constexpr int kFirstVertex = 5;
constexpr int kBottomElementCount = 9;

/// One face, four edges (e1..e4), four vertices (v1..v4). Edge ei joins
/// vertex vi and v(i mod 4)+1; ids follow kBottomFace/kFirstEdge/kFirstVertex.
std::vector<SurfaceElement> bottom_elements(const PlateModel& plate);

/// True when element `c` is an immediate boundary element of `a`.
bool bounds(const std::vector<SurfaceElement>& elements, int c, int a);

SurfaceElement transform_element(const SurfaceElement& element, const Pose& pose);

}  // namespace platelift
