#pragma once

#include <cstdint>
#include <vector>

#include "landmarks/calibration.hpp"
#include "landmarks/class_scores.hpp"
#include "landmarks/clustering.hpp"
#include "landmarks/geometry.hpp"
#include "landmarks/proposal.hpp"

namespace landmarks::sim {

/// Static tree or bush. The world frame has z = 0 on the (flat) ground.
struct Landmark {
  int id = 0;
  LandmarkClass cls = LandmarkClass::kTree;
  double x = 0.0;
  double y = 0.0;
  double canopy_diameter = 2.0;  // circular footprint
  double canopy_height = 4.0;
  double trunk_height = 0.0;  // trees only
  double trunk_diameter = 0.0;

  Vec3 canopy_center() const { return {x, y, trunk_height + 0.5 * canopy_height}; }
  double total_height() const { return trunk_height + canopy_height; }
  /// World-frame bound from the ground to the canopy top.
  Box3D bounds() const;
};

struct Bounds2D {
  double x_min = -30.0;
  double y_min = -30.0;
  double x_max = 30.0;
  double y_max = 30.0;
};

struct WorldSpec {
  std::vector<Landmark> landmarks;
  Bounds2D bounds;
  std::uint64_t seed = 0;
};

struct SensorSpec {
  double max_range = 60.0;
  double min_range = 2.5;
  double density_at_10m = 300.0;  // landmark surface points per m^2 at 10 m
  double falloff = 2.0;           // density ~ (10 / range)^falloff
  double noise_std = 0.02;
  double ground_density_at_10m = 55.0;
  double mount_height = 1.8;
  Calibration camera = Calibration::forward_camera(500.0, 1280, 720);
};

struct DropoutWindow {
  int landmark_id = 0;
  int first_frame = 0;  // inclusive
  int last_frame = 0;   // inclusive
};

struct DetectorSpec {
  double detection_probability = 0.7;
  double jitter_px = 3.0;
  double score_mean = 0.8;
  double score_std = 0.1;
  std::vector<DropoutWindow> dropouts;
};

/// Ego pose in the world frame: position of the sensor's ground footprint and heading.
struct Pose {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
};

enum class TrajectoryKind { kStraight, kArc };

struct TrajectorySpec {
  TrajectoryKind kind = TrajectoryKind::kStraight;
  double speed = 0.0;      // m/s
  double curvature = 0.0;  // 1/m, arc only
  Pose start;
};

class PlacementFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rejection-samples non-overlapping landmarks (footprint gap >= 2 m). Throws
/// PlacementFailure when a landmark is rejected 10 * n times in a row.
WorldSpec gen_world(std::uint64_t seed, int n_trees, int n_bushes, const Bounds2D& bounds);

/// `duration / dt` poses starting at `spec.start`, spaced by speed * dt.
std::vector<Pose> ego_trajectory(const TrajectorySpec& spec, double duration, double dt);

inline constexpr int kGroundLabel = -1;

struct RenderedFrame {
  PointCloud cloud;         // sensor frame
  std::vector<int> labels;  // landmark id per point, or kGroundLabel
};

/// Surface-sampled LiDAR-like cloud of the world as seen from `ego`.
RenderedFrame render_frame(const WorldSpec& world, const Pose& ego, const SensorSpec& sensor, std::uint64_t seed);

struct GroundTruthRect {
  int landmark_id = 0;
  LandmarkClass cls = LandmarkClass::kTree;
  Rect2D rect;
};

struct DetectorOutput {
  std::vector<Detection2D> detections;
  std::vector<GroundTruthRect> ground_truth;  // landmarks inside the camera view
};

/// Flaky 2D detector: each landmark in view is reported with the configured
/// probability (never inside a dropout window) with a jittered rectangle.
DetectorOutput simulate_detector(const WorldSpec& world, const Pose& ego, const DetectorSpec& detector,
                                 const SensorSpec& sensor, int frame, std::uint64_t seed);

// Rigid transforms between the world frame and the ego sensor frame.
Vec3 world_to_sensor(const Vec3& p, const Pose& ego, double mount_height);
Vec3 sensor_to_world(const Vec3& p, const Pose& ego, double mount_height);

/// Splits every landmark's points into `slabs` equal-width slices along the
/// sensor x axis and emits each non-empty slice as its own instance.
std::vector<Instance3D> oversegment_instances(const PointCloud& cloud, const std::vector<int>& labels, int slabs);

/// Deterministic per-(seed, frame, stream) RNG seed.
std::uint64_t frame_seed(std::uint64_t seed, int frame, std::uint64_t stream);

}  // namespace landmarks::sim
