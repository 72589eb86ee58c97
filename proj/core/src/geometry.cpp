#include "landmarks/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace landmarks {

namespace {
constexpr double kRotationTolerance = 1e-9;

bool all_finite(const auto& m) { return m.allFinite(); }
}  // namespace

Extrinsic::Extrinsic(const Eigen::Matrix4d& m) : m_(m) {
  if (!all_finite(m)) throw std::invalid_argument("extrinsic: non-finite entry");
  const Eigen::RowVector4d bottom(0.0, 0.0, 0.0, 1.0);
  if ((m.row(3) - bottom).cwiseAbs().maxCoeff() > kRotationTolerance) {
    throw std::invalid_argument("extrinsic: bottom row must be (0,0,0,1)");
  }
  const Eigen::Matrix3d r = m.topLeftCorner<3, 3>();
  const double ortho_err = (r * r.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (ortho_err > kRotationTolerance || std::abs(r.determinant() - 1.0) > kRotationTolerance) {
    throw std::invalid_argument("extrinsic: rotation block is not a proper rotation");
  }
}

Extrinsic Extrinsic::from_row_major(std::span<const double> values) {
  if (values.size() != 16) {
    throw std::invalid_argument("extrinsic: expected 16 values, got " + std::to_string(values.size()));
  }
  Eigen::Matrix4d m;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) m(r, c) = values[static_cast<std::size_t>(r * 4 + c)];
  return Extrinsic(m);
}

std::array<double, 16> Extrinsic::row_major() const {
  std::array<double, 16> out{};
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) out[static_cast<std::size_t>(r * 4 + c)] = m_(r, c);
  return out;
}

CameraProjection::CameraProjection() {
  m_.setZero();
  m_.leftCols<3>().setIdentity();
}

CameraProjection::CameraProjection(const Eigen::Matrix<double, 3, 4>& m) : m_(m) {
  if (!all_finite(m)) throw std::invalid_argument("projection: non-finite entry");
  if (m.cwiseAbs().maxCoeff() == 0.0) throw std::invalid_argument("projection: all entries zero");
}

CameraProjection CameraProjection::from_row_major(std::span<const double> values) {
  if (values.size() != 12) {
    throw std::invalid_argument("projection: expected 12 values, got " + std::to_string(values.size()));
  }
  Eigen::Matrix<double, 3, 4> m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) m(r, c) = values[static_cast<std::size_t>(r * 4 + c)];
  return CameraProjection(m);
}

CameraProjection CameraProjection::pinhole(double fx, double fy, double cx, double cy) {
  Eigen::Matrix<double, 3, 4> m;
  m << fx, 0.0, cx, 0.0,
       0.0, fy, cy, 0.0,
       0.0, 0.0, 1.0, 0.0;
  return CameraProjection(m);
}

std::array<double, 12> CameraProjection::row_major() const {
  std::array<double, 12> out{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) out[static_cast<std::size_t>(r * 4 + c)] = m_(r, c);
  return out;
}

Box3D::Box3D(const Vec3& c, const Vec3& d) : center(c), dims(d) {
  if (!c.allFinite() || !d.allFinite() || (d.array() <= 0.0).any()) {
    throw std::invalid_argument("box: dimensions must be finite and positive");
  }
}

Box3D Box3D::from_bounds(const Vec3& lo, const Vec3& hi) { return Box3D(0.5 * (lo + hi), hi - lo); }

Box3D Box3D::bounding(std::span<const Point4> points, double min_extent) {
  if (points.empty()) throw std::invalid_argument("box: cannot bound an empty point set");
  Vec3 lo = points.front().xyz();
  Vec3 hi = lo;
  for (const auto& p : points) {
    const Vec3 q = p.xyz();
    lo = lo.cwiseMin(q);
    hi = hi.cwiseMax(q);
  }
  for (int i = 0; i < 3; ++i) {
    if (hi[i] - lo[i] < min_extent) {
      const double mid = 0.5 * (lo[i] + hi[i]);
      lo[i] = mid - 0.5 * min_extent;
      hi[i] = mid + 0.5 * min_extent;
    }
  }
  return from_bounds(lo, hi);
}

bool Box3D::contains(const Vec3& p) const {
  return (p.array() >= min().array()).all() && (p.array() <= max().array()).all();
}

bool Box3D::strictly_contains(const Vec3& p) const {
  return (p.array() > min().array()).all() && (p.array() < max().array()).all();
}

std::array<Vec3, 8> Box3D::corners() const {
  std::array<Vec3, 8> out;
  const Vec3 lo = min();
  const Vec3 hi = max();
  for (int i = 0; i < 8; ++i) {
    out[static_cast<std::size_t>(i)] = Vec3((i & 1) ? hi.x() : lo.x(), (i & 2) ? hi.y() : lo.y(),
                                            (i & 4) ? hi.z() : lo.z());
  }
  return out;
}

Rect2D Rect2D::clipped(double width_px, double height_px) const {
  Rect2D r{std::clamp(x_min, 0.0, width_px), std::clamp(y_min, 0.0, height_px),
           std::clamp(x_max, 0.0, width_px), std::clamp(y_max, 0.0, height_px)};
  return r;
}

std::optional<Pixel> project_point(const Vec3& p, const Extrinsic& H, const CameraProjection& P) {
  const Eigen::Vector4d homogeneous(p.x(), p.y(), p.z(), 1.0);
  const Eigen::Vector3d image = P.matrix() * (H.matrix() * homogeneous);
  const double w = image.z();
  if (!(w > kBehindCameraEpsilon)) return std::nullopt;
  return Pixel{image.x() / w, image.y() / w};
}

std::optional<Rect2D> project_box(const Box3D& b, const Extrinsic& H, const CameraProjection& P) {
  std::optional<Rect2D> rect;
  for (const auto& corner : b.corners()) {
    const auto px = project_point(corner, H, P);
    if (!px) continue;
    if (!rect) {
      rect = Rect2D{px->u, px->v, px->u, px->v};
      continue;
    }
    rect->x_min = std::min(rect->x_min, px->u);
    rect->y_min = std::min(rect->y_min, px->v);
    rect->x_max = std::max(rect->x_max, px->u);
    rect->y_max = std::max(rect->y_max, px->v);
  }
  return rect;
}

double iou_2d(const Rect2D& a, const Rect2D& b) {
  const double ix = std::max(0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
  const double iy = std::max(0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  if (inter <= 0.0 || uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double overlap_3d(const Box3D& a, const Box3D& b) {
  const Vec3 lo = a.min().cwiseMax(b.min());
  const Vec3 hi = a.max().cwiseMin(b.max());
  const Vec3 extent = (hi - lo).cwiseMax(0.0);
  const double inter = extent.prod();
  if (inter <= 0.0) return 0.0;
  const double uni = a.volume() + b.volume() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double signed_distance(const Vec3& c, const Box3D& b, BoxSide side) {
  const int axis = static_cast<int>(side) / 2;
  const bool upper = static_cast<int>(side) % 2 == 1;
  const Vec3 lo = b.min();
  const Vec3 hi = b.max();
  const double plane = upper ? hi[axis] : lo[axis];

  if (b.strictly_contains(c)) return std::abs(c[axis] - plane);

  // Closest point on the bounded face rectangle.
  Vec3 closest = c.cwiseMax(lo).cwiseMin(hi);
  closest[axis] = plane;
  return -(c - closest).norm();
}

double max_signed_distance(const Vec3& c, const Box3D& b) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto side : kAllSides) best = std::max(best, signed_distance(c, b, side));
  return best;
}

}  // namespace landmarks
