#include "landmarks/proposal.hpp"

#include <fstream>
#include <stdexcept>
#include <tuple>

#include <nlohmann/json.hpp>

#include "landmarks/errors.hpp"

namespace landmarks {

ClassScores proposal_scores(LandmarkClass c, double score) {
  const double assigned = 0.5 + 0.5 * score;
  const double rest = (1.0 - assigned) / static_cast<double>(kNumSlots - 1);
  std::array<double, kNumSlots> v{};
  v.fill(rest);
  v[static_cast<std::size_t>(c)] = assigned;
  return ClassScores(v);
}

std::optional<std::size_t> best_detection(const Rect2D& instance_rect, const std::vector<Detection2D>& dets,
                                          double tau) {
  if (instance_rect.area() <= 0.0) return std::nullopt;
  std::optional<std::size_t> best;
  double best_iou = 0.0;
  for (std::size_t d = 0; d < dets.size(); ++d) {
    const double iou = iou_2d(instance_rect, dets[d].rect);
    if (!(iou > tau)) continue;
    if (!best) {
      best = d;
      best_iou = iou;
      continue;
    }
    const auto& cur = dets[*best];
    // Higher IoU, then higher score, then lower class id.
    if (std::make_tuple(iou, dets[d].score, -static_cast<int>(dets[d].class_id)) >
        std::make_tuple(best_iou, cur.score, -static_cast<int>(cur.class_id))) {
      best = d;
      best_iou = iou;
    }
  }
  return best;
}

std::vector<Instance3D> generate_proposals(std::vector<Instance3D> instances, const std::vector<Detection2D>& dets,
                                           const Calibration& calib, const ProposalConfig& cfg) {
  if (!(cfg.tau >= 0.0 && cfg.tau <= 1.0)) throw std::invalid_argument("tau must lie in [0, 1]");
  for (auto& inst : instances) {
    inst.class_proposal = ClassScores::uniform();
    const auto rect = project_box(inst.box, calib.lidar_to_camera, calib.projection);
    if (!rect) continue;
    if (const auto d = best_detection(*rect, dets, cfg.tau)) {
      inst.class_proposal = proposal_scores(dets[*d].class_id, dets[*d].score);
    }
  }
  return instances;
}

std::vector<Detection2D> detections_from_json(const nlohmann::json& j) {
  std::vector<Detection2D> out;
  try {
    for (const auto& item : j) {
      Detection2D d;
      const int cls = item.at("class").get<int>();
      if (cls < 0 || cls >= static_cast<int>(kNumClasses)) {
        throw ConfigError("detection class id out of range: " + std::to_string(cls));
      }
      d.class_id = static_cast<LandmarkClass>(cls);
      d.score = item.at("score").get<double>();
      if (!(d.score >= 0.0 && d.score <= 1.0)) throw ConfigError("detection score outside [0, 1]");
      const auto r = item.at("rect").get<std::vector<double>>();
      if (r.size() != 4) throw ConfigError("detection rect must have 4 entries");
      d.rect = {r[0], r[1], r[2], r[3]};
      if (!d.rect.valid()) throw ConfigError("detection rect has min > max");
      out.push_back(d);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("detections: ") + e.what());
  }
  return out;
}

nlohmann::json detections_to_json(const std::vector<Detection2D>& dets) {
  auto j = nlohmann::json::array();
  for (const auto& d : dets) {
    j.push_back({{"class", static_cast<int>(d.class_id)},
                 {"score", d.score},
                 {"rect", {d.rect.x_min, d.rect.y_min, d.rect.x_max, d.rect.y_max}}});
  }
  return j;
}

std::vector<Detection2D> load_detections(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open detections file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("detections " + path.string() + ": " + e.what());
  }
  return detections_from_json(j);
}

}  // namespace landmarks
