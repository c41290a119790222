#include "platelift/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace platelift {

Pose Pose::from_translation(const Vec3& t) {
  Pose p;
  p.translation = t;
  return p;
}

Pose Pose::from_axis_angle(const Vec3& axis, double angle) {
  Pose p;
  p.rotation = Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
  return p;
}

Pose Pose::from_rpy(const Vec3& xyz, double roll, double pitch, double yaw) {
  Pose p;
  p.rotation = (Eigen::AngleAxisd(yaw, Vec3::UnitZ()) * Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
                Eigen::AngleAxisd(roll, Vec3::UnitX()))
                   .toRotationMatrix();
  p.translation = xyz;
  return p;
}

Pose Pose::from_quaternion(const Vec3& xyz, const Eigen::Vector4d& wxyz) {
  Eigen::Quaterniond q(wxyz[0], wxyz[1], wxyz[2], wxyz[3]);
  if (q.norm() < 1e-12) throw std::invalid_argument("zero quaternion");
  q.normalize();
  Pose p;
  p.rotation = q.toRotationMatrix();
  p.translation = xyz;
  return p;
}

Pose Pose::operator*(const Pose& other) const {
  Pose p;
  p.rotation = rotation * other.rotation;
  p.translation = rotation * other.translation + translation;
  return p;
}

Pose Pose::inverse() const {
  Pose p;
  p.rotation = rotation.transpose();
  p.translation = -(p.rotation * translation);
  return p;
}

Eigen::Vector4d Pose::quaternion_wxyz() const {
  Eigen::Quaterniond q(rotation);
  q.normalize();
  // Canonical sign so serialized output is stable.
  if (q.w() < 0.0) q.coeffs() *= -1.0;
  return {q.w(), q.x(), q.y(), q.z()};
}

bool Pose::is_valid(double tol) const {
  if (!rotation.allFinite() || !translation.allFinite()) return false;
  const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(rotation.determinant() - 1.0) <= tol;
}

Pose rotation_about_line(const Vec3& point, const Vec3& axis, double angle) {
  return Pose::from_translation(point) * Pose::from_axis_angle(axis, angle) *
         Pose::from_translation(-point);
}

Mat3 skew(const Vec3& p) {
  Mat3 m;
  m << 0.0, -p.z(), p.y(),
       p.z(), 0.0, -p.x(),
       -p.y(), p.x(), 0.0;
  return m;
}

Mat3 frame_from_z(const Vec3& z_in) {
  const Vec3 z = z_in.normalized();
  // Pick the world axis least aligned with z as the x seed.
  Vec3 seed = Vec3::UnitX();
  if (std::abs(z.x()) > 0.9) seed = Vec3::UnitY();
  const Vec3 x = (seed - seed.dot(z) * z).normalized();
  const Vec3 y = z.cross(x);
  Mat3 r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return r;
}

void PlateModel::validate() const {
  if (!(length > 0.0) || !(width > 0.0) || !(height > 0.0))
    throw std::invalid_argument("plate dimensions must be strictly positive");
  if (!(mass > 0.0)) throw std::invalid_argument("plate mass must be strictly positive");
  if (!com_offset.allFinite() || std::abs(com_offset.x()) > 0.5 * length ||
      std::abs(com_offset.y()) > 0.5 * width || std::abs(com_offset.z()) > 0.5 * height)
    throw std::invalid_argument("plate center of mass must lie inside the plate");
}

std::array<Vec3, 8> PlateModel::corners() const {
  const double hx = 0.5 * length, hy = 0.5 * width, hz = 0.5 * height;
  return {Vec3(-hx, -hy, -hz), Vec3(hx, -hy, -hz), Vec3(hx, hy, -hz), Vec3(-hx, hy, -hz),
          Vec3(-hx, -hy, hz),  Vec3(hx, -hy, hz),  Vec3(hx, hy, hz),  Vec3(-hx, hy, hz)};
}

std::string to_string(ElementKind kind) {
  switch (kind) {
    case ElementKind::Face: return "face";
    case ElementKind::Edge: return "edge";
    case ElementKind::Vertex: return "vertex";
  }
  return "?";
}

std::vector<SurfaceElement> bottom_elements(const PlateModel& plate) {
  const auto c = plate.corners();
  std::vector<SurfaceElement> out;
  out.reserve(kBottomElementCount);

  SurfaceElement face;
  face.kind = ElementKind::Face;
  face.id = kBottomFace;
  face.label = "f";
  face.vertices = {c[0], c[1], c[2], c[3]};
  face.normal = -Vec3::UnitZ();
  face.boundary = {kFirstEdge, kFirstEdge + 1, kFirstEdge + 2, kFirstEdge + 3};
  out.push_back(face);

  for (int i = 0; i < 4; ++i) {
    const int j = (i + 1) % 4;
    SurfaceElement edge;
    edge.kind = ElementKind::Edge;
    edge.id = kFirstEdge + i;
    edge.label = "e" + std::to_string(i + 1);
    edge.vertices = {c[i], c[j]};
    // Outward side-face normal of this edge, averaged with the bottom normal.
    Vec3 mid = 0.5 * (c[i] + c[j]);
    Vec3 side(mid.x() / (0.5 * plate.length), mid.y() / (0.5 * plate.width), 0.0);
    side = Vec3(std::round(side.x()), std::round(side.y()), 0.0);
    edge.normal = (side - Vec3::UnitZ()).normalized();
    edge.boundary = {kFirstVertex + i, kFirstVertex + j};
    out.push_back(edge);
  }

  for (int i = 0; i < 4; ++i) {
    SurfaceElement vertex;
    vertex.kind = ElementKind::Vertex;
    vertex.id = kFirstVertex + i;
    vertex.label = "v" + std::to_string(i + 1);
    vertex.vertices = {c[i]};
    const Vec3 outward(c[i].x() > 0 ? 1.0 : -1.0, c[i].y() > 0 ? 1.0 : -1.0, -1.0);
    vertex.normal = outward.normalized();
    out.push_back(vertex);
  }
  return out;
}

bool bounds(const std::vector<SurfaceElement>& elements, int c, int a) {
  if (a < 0 || a >= static_cast<int>(elements.size())) return false;
  const auto& b = elements[static_cast<std::size_t>(a)].boundary;
  return std::find(b.begin(), b.end(), c) != b.end();
}

SurfaceElement transform_element(const SurfaceElement& element, const Pose& pose) {
  SurfaceElement out = element;
  for (auto& v : out.vertices) v = pose * v;
  out.normal = pose.rotate(element.normal);
  return out;
}

}  // namespace platelift
