#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace landmarks {

using Vec3 = Eigen::Vector3d;

/// LiDAR return in the sensor frame (x forward, y left, z up), intensity in [0, 1].
struct Point4 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double intensity = 0.0;

  Vec3 xyz() const { return {x, y, z}; }
  bool operator==(const Point4&) const = default;
};

using PointCloud = std::vector<Point4>;

/// Homogeneous rigid transform from the LiDAR frame into the camera frame.
class Extrinsic {
 public:
  Extrinsic() : m_(Eigen::Matrix4d::Identity()) {}
  /// Throws std::invalid_argument unless the bottom row is (0,0,0,1) and the
  /// rotation block is orthonormal with determinant +1.
  explicit Extrinsic(const Eigen::Matrix4d& m);
  static Extrinsic from_row_major(std::span<const double> values);

  const Eigen::Matrix4d& matrix() const { return m_; }
  std::array<double, 16> row_major() const;

 private:
  Eigen::Matrix4d m_;
};

/// 3x4 pinhole projection from the camera frame into pixels.
class CameraProjection {
 public:
  CameraProjection();
  explicit CameraProjection(const Eigen::Matrix<double, 3, 4>& m);
  static CameraProjection from_row_major(std::span<const double> values);
  static CameraProjection pinhole(double fx, double fy, double cx, double cy);

  const Eigen::Matrix<double, 3, 4>& matrix() const { return m_; }
  std::array<double, 12> row_major() const;

 private:
  Eigen::Matrix<double, 3, 4> m_;
};

/// Axis-aligned box in the sensor (or odometry) frame.
struct Box3D {
  Vec3 center = Vec3::Zero();
  Vec3 dims = Vec3::Ones();  // length (x), width (y), height (z)

  Box3D() = default;
  Box3D(const Vec3& c, const Vec3& d);
  static Box3D from_bounds(const Vec3& lo, const Vec3& hi);
  /// Tight bound of a non-empty point set. Degenerate extents are padded to
  /// `min_extent` so the result stays a valid box.
  static Box3D bounding(std::span<const Point4> points, double min_extent = 1e-3);

  Vec3 min() const { return center - 0.5 * dims; }
  Vec3 max() const { return center + 0.5 * dims; }
  double volume() const { return dims.prod(); }
  bool contains(const Vec3& p) const;           // closed
  bool strictly_contains(const Vec3& p) const;  // open interior
  std::array<Vec3, 8> corners() const;
};

struct Rect2D {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  bool valid() const { return x_min <= x_max && y_min <= y_max; }
  Rect2D clipped(double width_px, double height_px) const;
  bool operator==(const Rect2D&) const = default;
};

struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

inline constexpr double kBehindCameraEpsilon = 1e-6;

/// Projects a sensor-frame point into the image. Empty when the homogeneous
/// depth w <= kBehindCameraEpsilon, i.e. the point is behind the camera.
std::optional<Pixel> project_point(const Vec3& p, const Extrinsic& H, const CameraProjection& P);

/// Encasing rectangle of the projected box corners. Corners behind the camera
/// are skipped; empty when no corner projects.
std::optional<Rect2D> project_box(const Box3D& b, const Extrinsic& H, const CameraProjection& P);

double iou_2d(const Rect2D& a, const Rect2D& b);
double overlap_3d(const Box3D& a, const Box3D& b);

enum class BoxSide : int { kXMin = 0, kXMax, kYMin, kYMax, kZMin, kZMax };
inline constexpr std::array<BoxSide, 6> kAllSides = {BoxSide::kXMin, BoxSide::kXMax, BoxSide::kYMin,
                                                     BoxSide::kYMax, BoxSide::kZMin, BoxSide::kZMax};

// Positive perpendicular distance to the side's plane when b strictly
// contains c; otherwise minus the distance to the bounded face rectangle.
double signed_distance(const Vec3& c, const Box3D& b, BoxSide side);

// Maximum over all six sides of signed_distance. Positive iff b strictly
// contains c, zero on the boundary.
double max_signed_distance(const Vec3& c, const Box3D& b);

}  // namespace landmarks
