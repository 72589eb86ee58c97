#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "landmarks/class_scores.hpp"
#include "landmarks/geometry.hpp"

namespace landmarks {

struct GroundTruthBox {
  int frame = 0;
  int landmark_id = 0;
  LandmarkClass cls = LandmarkClass::kTree;
  Box3D box;
};

/// Reported landmark from the tracker.
struct TrackedBox {
  int track_id = 0;
  LandmarkClass cls = LandmarkClass::kTree;
  Box3D box;
};

struct MatchPair {
  std::size_t detection = 0;  // index into the detection list
  std::size_t ground_truth = 0;
};

struct FrameMatches {
  std::vector<MatchPair> true_positives;
  std::vector<std::size_t> false_positives;  // detection indices
  std::vector<std::size_t> false_negatives;  // ground-truth indices
};

/// A detection is a true positive for a ground truth when the classes agree
/// and the ground-truth box contains the detection's center. Each ground
/// truth, in input order, claims the nearest-center unclaimed candidate.
FrameMatches match_frame(const std::vector<TrackedBox>& dets, const std::vector<GroundTruthBox>& gts);

struct ClassMetrics {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::optional<double> recall;     // empty when undefined
  std::optional<double> precision;  // empty when undefined
  std::optional<double> rmse_xy;
  std::optional<double> mean_overlap;
};

struct StageTiming {
  double mean_ms = 0.0;
  double p95_ms = 0.0;
};

struct MetricsReport {
  std::array<ClassMetrics, kNumClasses> per_class;
  std::map<std::string, StageTiming> runtime_ms;
  std::vector<std::string> notes;
  std::size_t frames = 0;

  const ClassMetrics& of(LandmarkClass c) const { return per_class[static_cast<std::size_t>(c)]; }
};

/// Streams per-frame matches into per-class counts and error sums.
class MetricsAccumulator {
 public:
  void add_frame(const std::vector<TrackedBox>& dets, const std::vector<GroundTruthBox>& gts);
  void add_matches(const FrameMatches& m, const std::vector<TrackedBox>& dets, const std::vector<GroundTruthBox>& gts);
  void add_timing(const std::string& stage, double ms);

  MetricsReport report() const;
  std::size_t false_positives() const;
  std::size_t frames() const { return frames_; }

 private:
  struct Sums {
    std::size_t tp = 0, fp = 0, fn = 0;
    double sq_err_xy = 0.0;
    double overlap = 0.0;
  };
  std::array<Sums, kNumClasses> sums_{};
  std::map<std::string, std::vector<double>> timings_;
  std::size_t frames_ = 0;
};

/// Precision tp/(tp+fp), recall tp/(tp+fn); empty on a zero denominator.
std::optional<double> safe_ratio(std::size_t num, std::size_t den);
StageTiming summarize_timings(std::vector<double> samples_ms);

// {"per_class": {name: {"recall", "precision", "rmse_xy", "mean_overlap", "tp", "fp", "fn"}},
//  "runtime_ms": {stage: {"mean", "p95"}}, "notes": [...]}
nlohmann::json metrics_to_json(const MetricsReport& r);

}  // namespace landmarks
