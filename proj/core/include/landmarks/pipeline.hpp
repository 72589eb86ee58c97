#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "landmarks/calibration.hpp"
#include "landmarks/classifier.hpp"
#include "landmarks/clustering.hpp"
#include "landmarks/eval.hpp"
#include "landmarks/external_classifier.hpp"
#include "landmarks/gdpf.hpp"
#include "landmarks/proposal.hpp"
#include "landmarks/scenario.hpp"

namespace landmarks {

struct PipelineConfig {
  double tau = 0.2;
  std::size_t n_p = 1024;
  ClassifierKind classifier = ClassifierKind::kGeometric;
  std::string external_cmd;
  int external_timeout_ms = 200;
  GdpfConfig gdpf;
  GroundFilterParams ground;
  ClusterParams clustering;
  std::uint64_t seed = 1;

  // A component is reported once its existence reaches this value and its
  // class argmax is not "unknown".
  double report_existence = 0.6;
  // Measurement boxes are extended down to the local ground when the gap is
  // at most this many metres (negative disables).
  double ground_anchor_gap = 3.0;

  std::optional<std::filesystem::path> scenario_path;
  std::optional<std::filesystem::path> replay_dir;
  std::optional<std::filesystem::path> metrics_out;
  std::optional<std::filesystem::path> tracks_out;
  std::optional<std::filesystem::path> export_dir;
  int export_stride = 10;  // frames between component exports

  /// Throws ConfigError; returns non-fatal warnings.
  std::vector<std::string> validate() const;
};

/// Applies the keys present in `j` on top of `base`.
PipelineConfig pipeline_config_from_json(const nlohmann::json& j, PipelineConfig base = {});
PipelineConfig load_pipeline_config(const std::filesystem::path& path, PipelineConfig base = {});

struct StageTimes {
  double clustering_ms = 0.0;
  double proposal_ms = 0.0;
  double tracking_ms = 0.0;
  double classification_ms = 0.0;
  double total_ms = 0.0;
};

struct FrameResult {
  int frame = 0;
  std::vector<TrackState> tracks;     // every surviving component
  std::vector<TrackedBox> reported;   // confirmed, classified landmarks
  AssociationRecord association;
  std::vector<Instance3D> instances;  // this frame's proposals (sensor frame)
  std::vector<int> measurement_labels;  // majority landmark label per measurement, when known
  StageTimes times;
  int degraded_classifications = 0;
};

/// Per-frame orchestration: segmentation -> proposals -> tracking ->
/// classification, with the classified scores fused back into the tracks.
class Pipeline {
 public:
  Pipeline(PipelineConfig cfg, Calibration calibration, double mount_height);

  FrameResult process(const FrameInput& input, double dt);

  const Gdpf& tracker() const { return tracker_; }
  const PipelineConfig& config() const { return cfg_; }
  int warnings() const;

 private:
  PipelineConfig cfg_;
  Calibration calibration_;
  double mount_height_;
  Gdpf tracker_;
  std::unique_ptr<ExternalClassifier> external_;
};

struct RunSummary {
  MetricsReport metrics;
  std::size_t frames = 0;
  std::size_t false_positives = 0;
  int warnings = 0;
  int exported_records = 0;
  bool has_ground_truth = false;
  std::vector<std::string> messages;
};

/// Runs a whole scenario or replay per the config and writes the requested
/// outputs. A scenario object may be passed directly instead of a path.
RunSummary run_pipeline(const PipelineConfig& cfg, const Scenario* scenario = nullptr);

}  // namespace landmarks
