#pragma once

#include <filesystem>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "landmarks/calibration.hpp"
#include "landmarks/class_scores.hpp"
#include "landmarks/clustering.hpp"

namespace landmarks {

/// Classified image rectangle from the 2D detector.
struct Detection2D {
  Rect2D rect;
  LandmarkClass class_id = LandmarkClass::kTree;
  double score = 1.0;
};

struct ProposalConfig {
  double tau = 0.2;  // IoU threshold in [0, 1]; a match needs IoU > tau
};

/// Score-weighted class vector: `c` gets 0.5 + 0.5 * score, the rest is spread
/// uniformly over the other slots.
ClassScores proposal_scores(LandmarkClass c, double score);

/// Index of the detection an instance rectangle matches, if any. Among
/// detections with IoU > tau the highest IoU wins, then the higher score,
/// then the lower class id.
std::optional<std::size_t> best_detection(const Rect2D& instance_rect, const std::vector<Detection2D>& dets,
                                          double tau);

/// Fills `class_proposal` on every instance. Unmatched instances, instances
/// whose box does not project, and zero-area projections get the uniform prior.
std::vector<Instance3D> generate_proposals(std::vector<Instance3D> instances, const std::vector<Detection2D>& dets,
                                           const Calibration& calib, const ProposalConfig& cfg);

// [{"class": int, "score": float, "rect": [x_min, y_min, x_max, y_max]}, ...]
std::vector<Detection2D> detections_from_json(const nlohmann::json& j);
nlohmann::json detections_to_json(const std::vector<Detection2D>& dets);
std::vector<Detection2D> load_detections(const std::filesystem::path& path);

}  // namespace landmarks
