#pragma once

#include <Eigen/Core>

#include <array>
#include <span>
#include <vector>

namespace aeg::geometry {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Oriented bounding box in world coordinates (meters).
///
/// Columns of `rotation()` are the box's local axes expressed in the world
/// frame, so a local point `p` maps to `center + rotation * p`.
class OrientedBox {
 public:
  /// Unit cube (half extents 0.5) at the origin.
  OrientedBox() : center_(Vec3::Zero()), half_extents_(Vec3::Constant(0.5)), rotation_(Mat3::Identity()) {}
  /// Throws Error{InvalidBox} unless every half extent is > 0 and the rotation
  /// is orthonormal (within 1e-6) with determinant +1.
  OrientedBox(const Vec3& center, const Vec3& half_extents, const Mat3& rotation);

  static OrientedBox axis_aligned(const Vec3& center, const Vec3& half_extents);
  /// `rotation` in row-major order, matching the scene file layout.
  static OrientedBox from_row_major(const Vec3& center, const Vec3& half_extents,
                                    std::span<const double, 9> rotation);

  const Vec3& center() const { return center_; }
  const Vec3& half_extents() const { return half_extents_; }
  const Mat3& rotation() const { return rotation_; }
  std::array<double, 9> rotation_row_major() const;

  std::array<Vec3, 8> vertices() const;
  double volume() const;
  /// World-frame z range of the box.
  double min_z() const;
  double max_z() const;
  bool contains(const Vec3& point, double tolerance = 1e-12) const;

  bool operator==(const OrientedBox& other) const;

 private:
  Vec3 center_;
  Vec3 half_extents_;
  Mat3 rotation_;
};

Mat3 rotation_x(double radians);
Mat3 rotation_y(double radians);
Mat3 rotation_z(double radians);

/// Convex polygon with counter-clockwise vertices.
class ConvexPolygon2D {
 public:
  ConvexPolygon2D() = default;
  explicit ConvexPolygon2D(std::vector<Vec2> ccw_vertices) : vertices_(std::move(ccw_vertices)) {}

  const std::vector<Vec2>& vertices() const { return vertices_; }
  std::size_t size() const { return vertices_.size(); }
  bool empty() const { return vertices_.size() < 3; }
  /// Shoelace formula; positive for counter-clockwise input.
  double signed_area() const;
  double area() const;

 private:
  std::vector<Vec2> vertices_;
};

/// Convex hull (Andrew's monotone chain), CCW, collinear points dropped.
ConvexPolygon2D convex_hull(std::vector<Vec2> points);

/// Sutherland–Hodgman clip of `subject` against convex `clip`.
ConvexPolygon2D clip_convex(const ConvexPolygon2D& subject, const ConvexPolygon2D& clip);

ConvexPolygon2D xy_footprint(const OrientedBox& box);

/// Intersection-over-union of the two XY footprints, in [0, 1].
double xy_iou(const OrientedBox& a, const OrientedBox& b);

/// Separating-axis test over the 15 candidate axes. Boxes that only touch
/// (zero-volume contact) are reported as not intersecting.
bool boxes_intersect_3d(const OrientedBox& a, const OrientedBox& b);

/// Fraction of `contained`'s volume inside `container`, estimated on a
/// resolution^3 grid of cell centers in `contained`'s local frame.
double containment_fraction(const OrientedBox& container, const OrientedBox& contained,
                            int resolution = 16);

/// Minimum distance over the 64 vertex pairs.
double closest_vertex_distance(const OrientedBox& a, const OrientedBox& b);

}  // namespace aeg::geometry
