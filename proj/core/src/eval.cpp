#include "landmarks/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

namespace landmarks {

FrameMatches match_frame(const std::vector<TrackedBox>& dets, const std::vector<GroundTruthBox>& gts) {
  FrameMatches m;
  std::vector<bool> claimed(dets.size(), false);
  for (std::size_t g = 0; g < gts.size(); ++g) {
    std::optional<std::size_t> best;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t d = 0; d < dets.size(); ++d) {
      if (claimed[d] || dets[d].cls != gts[g].cls) continue;
      if (!gts[g].box.contains(dets[d].box.center)) continue;
      const double d2 = (dets[d].box.center - gts[g].box.center).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best = d;
      }
    }
    if (best) {
      claimed[*best] = true;
      m.true_positives.push_back({*best, g});
    } else {
      m.false_negatives.push_back(g);
    }
  }
  for (std::size_t d = 0; d < dets.size(); ++d) {
    if (!claimed[d]) m.false_positives.push_back(d);
  }
  return m;
}

std::optional<double> safe_ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

StageTiming summarize_timings(std::vector<double> samples_ms) {
  StageTiming t;
  if (samples_ms.empty()) return t;
  double sum = 0.0;
  for (const double v : samples_ms) sum += v;
  t.mean_ms = sum / static_cast<double>(samples_ms.size());
  std::sort(samples_ms.begin(), samples_ms.end());
  // Nearest-rank percentile.
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(samples_ms.size())));
  t.p95_ms = samples_ms[std::clamp<std::size_t>(rank, 1, samples_ms.size()) - 1];
  return t;
}

void MetricsAccumulator::add_frame(const std::vector<TrackedBox>& dets, const std::vector<GroundTruthBox>& gts) {
  add_matches(match_frame(dets, gts), dets, gts);
}

void MetricsAccumulator::add_matches(const FrameMatches& m, const std::vector<TrackedBox>& dets,
                                     const std::vector<GroundTruthBox>& gts) {
  ++frames_;
  for (const auto& tp : m.true_positives) {
    const auto& det = dets[tp.detection];
    const auto& gt = gts[tp.ground_truth];
    auto& s = sums_[static_cast<std::size_t>(gt.cls)];
    ++s.tp;
    const double dx = det.box.center.x() - gt.box.center.x();
    const double dy = det.box.center.y() - gt.box.center.y();
    s.sq_err_xy += dx * dx + dy * dy;
    s.overlap += overlap_3d(det.box, gt.box);
  }
  for (const auto d : m.false_positives) {
    const auto cls = dets[d].cls;
    if (cls == LandmarkClass::kUnknown) continue;
    ++sums_[static_cast<std::size_t>(cls)].fp;
  }
  for (const auto g : m.false_negatives) ++sums_[static_cast<std::size_t>(gts[g].cls)].fn;
}

void MetricsAccumulator::add_timing(const std::string& stage, double ms) { timings_[stage].push_back(ms); }

std::size_t MetricsAccumulator::false_positives() const {
  std::size_t fp = 0;
  for (const auto& s : sums_) fp += s.fp;
  return fp;
}

MetricsReport MetricsAccumulator::report() const {
  MetricsReport r;
  r.frames = frames_;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto& s = sums_[c];
    auto& out = r.per_class[c];
    out.tp = s.tp;
    out.fp = s.fp;
    out.fn = s.fn;
    out.precision = safe_ratio(s.tp, s.tp + s.fp);
    out.recall = safe_ratio(s.tp, s.tp + s.fn);
    if (s.tp > 0) {
      out.rmse_xy = std::sqrt(s.sq_err_xy / static_cast<double>(s.tp));
      out.mean_overlap = s.overlap / static_cast<double>(s.tp);
    }
  }
  for (const auto& [stage, samples] : timings_) r.runtime_ms[stage] = summarize_timings(samples);
  r.notes.push_back(
      "precision = tp / (tp + fp) and recall = tp / (tp + fn) (standard definitions; the variants "
      "tp / (fn + fp) and tp / (tp + fp) for precision and recall are not used)");
  r.notes.push_back("rmse_xy and mean_overlap are computed over true positives only; z is ignored in rmse_xy");
  r.notes.push_back("undefined metrics (zero denominators) are reported as null");
  return r;
}

nlohmann::json metrics_to_json(const MetricsReport& r) {
  auto opt = [](const std::optional<double>& v) -> nlohmann::json { return v ? nlohmann::json(*v) : nlohmann::json(); };
  nlohmann::json per_class = nlohmann::json::object();
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto& m = r.per_class[c];
    per_class[std::string(class_name(static_cast<LandmarkClass>(c)))] = {
        {"recall", opt(m.recall)}, {"precision", opt(m.precision)}, {"rmse_xy", opt(m.rmse_xy)},
        {"mean_overlap", opt(m.mean_overlap)}, {"tp", m.tp}, {"fp", m.fp}, {"fn", m.fn}};
  }
  nlohmann::json runtime = nlohmann::json::object();
  for (const auto& [stage, t] : r.runtime_ms) runtime[stage] = {{"mean", t.mean_ms}, {"p95", t.p95_ms}};
  return {{"per_class", per_class}, {"runtime_ms", runtime}, {"notes", r.notes}, {"frames", r.frames}};
}

}  // namespace landmarks
