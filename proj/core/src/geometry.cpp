#include "aeg/geometry.hpp"

#include "aeg/error.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace aeg::geometry {

namespace {

constexpr double kOrthonormalTolerance = 1e-6;
// Separation slack for the SAT test, in meters. Resting contact computed in
// floating point must not register as overlap.
constexpr double kContactSlack = 1e-9;

double cross2(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

}  // namespace

OrientedBox::OrientedBox(const Vec3& center, const Vec3& half_extents, const Mat3& rotation)
    : center_(center), half_extents_(half_extents), rotation_(rotation) {
  if (!center.allFinite() || !half_extents.allFinite() || !rotation.allFinite()) {
    throw Error(ErrorCode::InvalidBox, "box has non-finite components");
  }
  if ((half_extents.array() <= 0.0).any()) {
    std::ostringstream os;
    os << "half extents must be strictly positive, got (" << half_extents.transpose() << ")";
    throw Error(ErrorCode::InvalidBox, os.str());
  }
  const double ortho_err = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho_err > kOrthonormalTolerance) {
    throw Error(ErrorCode::InvalidBox, "rotation is not orthonormal");
  }
  if (rotation.determinant() <= 0.0) {
    throw Error(ErrorCode::InvalidBox, "rotation has determinant -1 (reflection)");
  }
}

OrientedBox OrientedBox::axis_aligned(const Vec3& center, const Vec3& half_extents) {
  return OrientedBox(center, half_extents, Mat3::Identity());
}

OrientedBox OrientedBox::from_row_major(const Vec3& center, const Vec3& half_extents,
                                        std::span<const double, 9> rotation) {
  Mat3 r;
  r << rotation[0], rotation[1], rotation[2], rotation[3], rotation[4], rotation[5], rotation[6],
      rotation[7], rotation[8];
  return OrientedBox(center, half_extents, r);
}

std::array<double, 9> OrientedBox::rotation_row_major() const {
  std::array<double, 9> out{};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out[static_cast<std::size_t>(3 * r + c)] = rotation_(r, c);
  }
  return out;
}

std::array<Vec3, 8> OrientedBox::vertices() const {
  std::array<Vec3, 8> out;
  for (int i = 0; i < 8; ++i) {
    const Vec3 sign((i & 1) ? 1.0 : -1.0, (i & 2) ? 1.0 : -1.0, (i & 4) ? 1.0 : -1.0);
    out[static_cast<std::size_t>(i)] = center_ + rotation_ * sign.cwiseProduct(half_extents_);
  }
  return out;
}

double OrientedBox::volume() const { return 8.0 * half_extents_.prod(); }

double OrientedBox::min_z() const {
  // Half-height of the world-z extent: sum_k |R(2,k)| * h_k.
  return center_.z() - rotation_.row(2).cwiseAbs().dot(half_extents_);
}

double OrientedBox::max_z() const {
  return center_.z() + rotation_.row(2).cwiseAbs().dot(half_extents_);
}

bool OrientedBox::contains(const Vec3& point, double tolerance) const {
  const Vec3 local = rotation_.transpose() * (point - center_);
  return (local.cwiseAbs() - half_extents_).maxCoeff() <= tolerance;
}

bool OrientedBox::operator==(const OrientedBox& other) const {
  return center_ == other.center_ && half_extents_ == other.half_extents_ &&
         rotation_ == other.rotation_;
}

Mat3 rotation_x(double radians) { return Eigen::AngleAxisd(radians, Vec3::UnitX()).toRotationMatrix(); }
Mat3 rotation_y(double radians) { return Eigen::AngleAxisd(radians, Vec3::UnitY()).toRotationMatrix(); }
Mat3 rotation_z(double radians) { return Eigen::AngleAxisd(radians, Vec3::UnitZ()).toRotationMatrix(); }

double ConvexPolygon2D::signed_area() const {
  if (vertices_.size() < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0, n = vertices_.size(); i < n; ++i) {
    const Vec2& p = vertices_[i];
    const Vec2& q = vertices_[(i + 1) % n];
    twice += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * twice;
}

double ConvexPolygon2D::area() const { return std::abs(signed_area()); }

ConvexPolygon2D convex_hull(std::vector<Vec2> points) {
  std::sort(points.begin(), points.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  points.erase(std::unique(points.begin(), points.end()), points.end());
  if (points.size() < 3) return ConvexPolygon2D(std::move(points));

  std::vector<Vec2> hull(2 * points.size());
  std::size_t k = 0;
  for (const Vec2& p : points) {
    while (k >= 2 && cross2(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = points.size() - 1, lower = k + 1; i-- > 0;) {
    const Vec2& p = points[i];
    while (k >= lower && cross2(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  hull.resize(k - 1);
  return ConvexPolygon2D(std::move(hull));
}

ConvexPolygon2D clip_convex(const ConvexPolygon2D& subject, const ConvexPolygon2D& clip) {
  std::vector<Vec2> output = subject.vertices();
  const auto& edges = clip.vertices();
  for (std::size_t e = 0, n = edges.size(); e < n && !output.empty(); ++e) {
    const Vec2& a = edges[e];
    const Vec2& b = edges[(e + 1) % n];
    std::vector<Vec2> input;
    input.swap(output);
    for (std::size_t i = 0, m = input.size(); i < m; ++i) {
      const Vec2& cur = input[i];
      const Vec2& prev = input[(i + m - 1) % m];
      const double dc = cross2(a, b, cur);
      const double dp = cross2(a, b, prev);
      const bool cur_in = dc >= 0.0;
      const bool prev_in = dp >= 0.0;
      if (cur_in != prev_in) {
        const double t = dp / (dp - dc);
        output.emplace_back(prev + t * (cur - prev));
      }
      if (cur_in) output.push_back(cur);
    }
  }
  if (output.size() < 3) return ConvexPolygon2D{};
  return ConvexPolygon2D(std::move(output));
}

ConvexPolygon2D xy_footprint(const OrientedBox& box) {
  std::vector<Vec2> projected;
  projected.reserve(8);
  for (const Vec3& v : box.vertices()) projected.emplace_back(v.x(), v.y());
  return convex_hull(std::move(projected));
}

double xy_iou(const OrientedBox& a, const OrientedBox& b) {
  const ConvexPolygon2D fa = xy_footprint(a);
  const ConvexPolygon2D fb = xy_footprint(b);
  const double area_a = fa.area();
  const double area_b = fb.area();
  const double inter = clip_convex(fa, fb).area();
  const double uni = area_a + area_b - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

bool boxes_intersect_3d(const OrientedBox& a, const OrientedBox& b) {
  const Mat3& ra = a.rotation();
  const Mat3& rb = b.rotation();
  const Vec3 t = b.center() - a.center();

  std::array<Vec3, 15> axes;
  std::size_t count = 0;
  for (int i = 0; i < 3; ++i) axes[count++] = ra.col(i);
  for (int i = 0; i < 3; ++i) axes[count++] = rb.col(i);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      Vec3 axis = ra.col(i).cross(rb.col(j));
      const double norm = axis.norm();
      // Parallel edge pairs produce a degenerate axis already covered above.
      if (norm < 1e-9) continue;
      axes[count++] = axis / norm;
    }
  }

  for (std::size_t k = 0; k < count; ++k) {
    const Vec3& axis = axes[k];
    const double radius_a = (ra.transpose() * axis).cwiseAbs().dot(a.half_extents());
    const double radius_b = (rb.transpose() * axis).cwiseAbs().dot(b.half_extents());
    if (std::abs(t.dot(axis)) >= radius_a + radius_b - kContactSlack) return false;
  }
  return true;
}

double containment_fraction(const OrientedBox& container, const OrientedBox& contained,
                            int resolution) {
  if (resolution < 1) throw Error(ErrorCode::InvalidInput, "containment resolution must be positive");
  const Vec3& h = contained.half_extents();
  const Mat3& r = contained.rotation();
  const double step = 2.0 / resolution;
  std::size_t inside = 0;
  for (int i = 0; i < resolution; ++i) {
    const double u = -1.0 + (i + 0.5) * step;
    for (int j = 0; j < resolution; ++j) {
      const double v = -1.0 + (j + 0.5) * step;
      for (int k = 0; k < resolution; ++k) {
        const double w = -1.0 + (k + 0.5) * step;
        const Vec3 local(u * h.x(), v * h.y(), w * h.z());
        if (container.contains(contained.center() + r * local)) ++inside;
      }
    }
  }
  const double total = static_cast<double>(resolution) * resolution * resolution;
  return static_cast<double>(inside) / total;
}

double closest_vertex_distance(const OrientedBox& a, const OrientedBox& b) {
  const auto va = a.vertices();
  const auto vb = b.vertices();
  double best = std::numeric_limits<double>::infinity();
  for (const Vec3& p : va) {
    for (const Vec3& q : vb) best = std::min(best, (p - q).squaredNorm());
  }
  return std::sqrt(best);
}

}  // namespace aeg::geometry
