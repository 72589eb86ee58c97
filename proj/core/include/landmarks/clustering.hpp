#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "landmarks/class_scores.hpp"
#include "landmarks/geometry.hpp"

namespace landmarks {

/// Clustered subset of one frame's cloud. May be a fragment of a physical object.
struct Instance3D {
  int id = 0;
  PointCloud points;
  std::vector<std::size_t> source_indices;  // into the clustered cloud
  Box3D box;
  std::optional<ClassScores> class_proposal;
};

struct GroundFilterParams {
  double cell = 0.5;      // x-y cell edge, meters
  double z_margin = 0.3;  // points below cell-min-z + margin are ground
};

struct ClusterParams {
  double radius = 0.5;
  std::size_t min_points = 10;
};

/// Lowest z per x-y cell of a cloud.
class GroundGrid {
 public:
  GroundGrid(const PointCloud& cloud, const GroundFilterParams& params);

  /// Indices of the points at least z_margin above their cell's lowest point.
  std::vector<std::size_t> non_ground_indices(const PointCloud& cloud) const;
  /// Lowest cell minimum under the box footprint, if any cell there has points.
  std::optional<double> ground_below(const Box3D& box) const;

 private:
  static std::int64_t index(double v, double cell);
  GroundFilterParams params_;
  std::unordered_map<std::uint64_t, double> min_z_;
};

/// Indices of the points kept by the per-cell height filter, in input order.
std::vector<std::size_t> non_ground_indices(const PointCloud& cloud, const GroundFilterParams& params);
PointCloud remove_ground(const PointCloud& cloud, const GroundFilterParams& params);

/// Euclidean connected components (points linked when within `radius`),
/// dropping components smaller than `min_points`. Instances are ordered by
/// the (min x, min y) corner of their bound and numbered from 0 in that order.
std::vector<Instance3D> cluster(const PointCloud& cloud, const ClusterParams& params);

}  // namespace landmarks
