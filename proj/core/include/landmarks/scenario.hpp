#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "landmarks/eval.hpp"
#include "landmarks/proposal.hpp"
#include "landmarks/simulator.hpp"

namespace landmarks {

/// Everything needed to generate a synthetic run.
struct Scenario {
  sim::WorldSpec world;
  sim::SensorSpec sensor;
  sim::DetectorSpec detector;
  sim::TrajectorySpec trajectory;
  int n_frames = 100;
  double dt = 0.1;
  std::uint64_t seed = 1;
  int oversegment_slabs = 0;  // > 0 bypasses clustering with per-landmark slabs
};

/// One frame of pipeline input. Frames are numbered from 1.
struct FrameInput {
  int frame = 1;
  sim::Pose pose;
  PointCloud cloud;
  std::vector<int> labels;  // per point; empty when unknown (replay)
  std::vector<Detection2D> detections;
  std::optional<std::vector<GroundTruthBox>> ground_truth;  // world frame
  std::optional<std::vector<Instance3D>> instances;        // pre-segmented (over-segmentation stressor)
};

Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& s);
Scenario load_scenario(const std::filesystem::path& path);

/// Standard benchmark: 6 trees and 4 bushes ahead of an ego creeping forward,
/// detector p = 0.7 with 3 px jitter, 100 frames at 10 Hz.
Scenario benchmark_scenario(std::uint64_t seed);

/// Ground-truth boxes of the landmarks within sensor range at `ego`.
std::vector<GroundTruthBox> ground_truth_boxes(const sim::WorldSpec& world, const sim::Pose& ego,
                                               const sim::SensorSpec& sensor, int frame);

/// Deterministic function of (scenario, frame).
FrameInput simulate_frame(const Scenario& s, const std::vector<sim::Pose>& poses, int frame);
std::vector<sim::Pose> scenario_poses(const Scenario& s);

/// Writes calibration.json, poses.json and per-frame
/// frame_NNNNNN.{bin,detections.json,gt.json} into `dir`.
void export_replay(const Scenario& s, const std::filesystem::path& dir);

/// Reads back a replay directory written by export_replay (or recorded data
/// in the same layout). Ground truth and poses are optional.
class ReplayReader {
 public:
  explicit ReplayReader(std::filesystem::path dir);

  int frame_count() const { return static_cast<int>(frames_.size()); }
  double dt() const { return dt_; }
  double mount_height() const { return mount_height_; }
  const Calibration& calibration() const { return calibration_; }
  FrameInput load(int index) const;  // 0-based position in the sorted frame list

 private:
  std::filesystem::path dir_;
  std::vector<int> frames_;
  std::map<int, sim::Pose> poses_;
  Calibration calibration_;
  double dt_ = 0.1;
  double mount_height_ = 0.0;
};

}  // namespace landmarks
