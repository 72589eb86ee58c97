#include "landmarks/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <regex>

#include <nlohmann/json.hpp>

#include "landmarks/cloud_io.hpp"
#include "landmarks/errors.hpp"

namespace landmarks {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

LandmarkClass parse_class(const json& v) {
  if (v.is_number_integer()) {
    const int c = v.get<int>();
    if (c < 0 || c >= static_cast<int>(kNumClasses)) throw ConfigError("class id out of range");
    return static_cast<LandmarkClass>(c);
  }
  const auto c = class_from_name(v.get<std::string>());
  if (!c || *c == LandmarkClass::kUnknown) throw ConfigError("unknown landmark class " + v.dump());
  return *c;
}

sim::Bounds2D parse_bounds(const json& j, const sim::Bounds2D& fallback) {
  if (!j.contains("bounds")) return fallback;
  const auto b = j.at("bounds").get<std::vector<double>>();
  if (b.size() != 4) throw ConfigError("bounds must be [x_min, y_min, x_max, y_max]");
  return {b[0], b[1], b[2], b[3]};
}

json landmark_to_json(const sim::Landmark& lm) {
  return {{"id", lm.id},
          {"class", std::string(class_name(lm.cls))},
          {"x", lm.x},
          {"y", lm.y},
          {"canopy_diameter", lm.canopy_diameter},
          {"canopy_height", lm.canopy_height},
          {"trunk_height", lm.trunk_height},
          {"trunk_diameter", lm.trunk_diameter}};
}

sim::WorldSpec parse_world(const json& j) {
  const sim::Bounds2D bounds = parse_bounds(j, {});
  if (j.contains("landmarks")) {
    sim::WorldSpec w;
    w.bounds = bounds;
    w.seed = j.value("seed", std::uint64_t{0});
    for (const auto& l : j.at("landmarks")) {
      sim::Landmark lm;
      lm.id = l.value("id", static_cast<int>(w.landmarks.size()));
      lm.cls = parse_class(l.at("class"));
      lm.x = l.at("x").get<double>();
      lm.y = l.at("y").get<double>();
      lm.canopy_diameter = l.at("canopy_diameter").get<double>();
      lm.canopy_height = l.at("canopy_height").get<double>();
      lm.trunk_height = l.value("trunk_height", 0.0);
      lm.trunk_diameter = l.value("trunk_diameter", 0.0);
      if (lm.canopy_diameter <= 0 || lm.canopy_height <= 0 || lm.trunk_height < 0 || lm.trunk_diameter < 0) {
        throw ConfigError("landmark " + std::to_string(lm.id) + ": dimensions must be positive");
      }
      w.landmarks.push_back(lm);
    }
    return w;
  }
  return sim::gen_world(j.value("seed", std::uint64_t{0}), j.value("n_trees", 0), j.value("n_bushes", 0), bounds);
}

sim::SensorSpec parse_sensor(const json& j) {
  sim::SensorSpec s;
  s.max_range = j.value("max_range", s.max_range);
  s.min_range = j.value("min_range", s.min_range);
  s.density_at_10m = j.value("density_at_10m", s.density_at_10m);
  s.falloff = j.value("falloff", s.falloff);
  s.noise_std = j.value("noise_std", s.noise_std);
  s.ground_density_at_10m = j.value("ground_density_at_10m", s.ground_density_at_10m);
  s.mount_height = j.value("mount_height", s.mount_height);
  if (j.contains("calibration")) s.camera = calibration_from_json(j.at("calibration"));
  if (!(s.max_range > 0 && s.min_range > 0 && s.density_at_10m >= 0 && s.falloff >= 0 && s.noise_std >= 0 &&
        s.ground_density_at_10m >= 0)) {
    throw ConfigError("sensor: ranges must be positive and densities/noise non-negative");
  }
  return s;
}

json sensor_to_json(const sim::SensorSpec& s) {
  return {{"max_range", s.max_range},
          {"min_range", s.min_range},
          {"density_at_10m", s.density_at_10m},
          {"falloff", s.falloff},
          {"noise_std", s.noise_std},
          {"ground_density_at_10m", s.ground_density_at_10m},
          {"mount_height", s.mount_height},
          {"calibration", calibration_to_json(s.camera)}};
}

sim::DetectorSpec parse_detector(const json& j) {
  sim::DetectorSpec d;
  d.detection_probability = j.value("detection_probability", d.detection_probability);
  d.jitter_px = j.value("jitter_px", d.jitter_px);
  d.score_mean = j.value("score_mean", d.score_mean);
  d.score_std = j.value("score_std", d.score_std);
  if (j.contains("dropouts")) {
    for (const auto& w : j.at("dropouts")) {
      d.dropouts.push_back({w.at("landmark").get<int>(), w.at("first").get<int>(), w.at("last").get<int>()});
    }
  }
  if (!(d.detection_probability >= 0 && d.detection_probability <= 1)) {
    throw ConfigError("detector: detection_probability outside [0, 1]");
  }
  return d;
}

json detector_to_json(const sim::DetectorSpec& d) {
  auto drops = json::array();
  for (const auto& w : d.dropouts) drops.push_back({{"landmark", w.landmark_id}, {"first", w.first_frame}, {"last", w.last_frame}});
  return {{"detection_probability", d.detection_probability},
          {"jitter_px", d.jitter_px},
          {"score_mean", d.score_mean},
          {"score_std", d.score_std},
          {"dropouts", drops}};
}

sim::TrajectorySpec parse_trajectory(const json& j) {
  sim::TrajectorySpec t;
  const auto kind = j.value("kind", std::string("straight"));
  if (kind == "straight") {
    t.kind = sim::TrajectoryKind::kStraight;
  } else if (kind == "arc") {
    t.kind = sim::TrajectoryKind::kArc;
  } else {
    throw ConfigError("trajectory kind must be straight or arc");
  }
  t.speed = j.value("speed", 0.0);
  t.curvature = j.value("curvature", 0.0);
  if (j.contains("start")) {
    const auto s = j.at("start").get<std::vector<double>>();
    if (s.size() != 3) throw ConfigError("trajectory start must be [x, y, yaw]");
    t.start = {s[0], s[1], s[2]};
  }
  return t;
}

std::string frame_stem(int frame) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%06d", frame);
  return buf;
}

json box_to_json(const Box3D& b) {
  return {b.center.x(), b.center.y(), b.center.z(), b.dims.x(), b.dims.y(), b.dims.z()};
}

Box3D box_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 6) throw ConfigError("box must be [cx, cy, cz, l, w, h]");
  return Box3D(Vec3(v[0], v[1], v[2]), Vec3(v[3], v[4], v[5]));
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + p.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(p.string() + ": " + e.what());
  }
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream out(p);
  if (!out) throw IoError("cannot write " + p.string());
  out << j.dump(2) << '\n';
}

}  // namespace

Scenario scenario_from_json(const json& j) {
  try {
    Scenario s;
    s.world = parse_world(j.at("world"));
    if (j.contains("sensor")) s.sensor = parse_sensor(j.at("sensor"));
    if (j.contains("detector")) s.detector = parse_detector(j.at("detector"));
    if (j.contains("trajectory")) s.trajectory = parse_trajectory(j.at("trajectory"));
    s.n_frames = j.value("n_frames", s.n_frames);
    s.dt = j.value("dt", s.dt);
    s.seed = j.value("seed", s.seed);
    s.oversegment_slabs = j.value("oversegment_slabs", 0);
    if (s.n_frames < 0) throw ConfigError("n_frames must be >= 0");
    if (!(s.dt > 0)) throw ConfigError("dt must be > 0");
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
}

json scenario_to_json(const Scenario& s) {
  auto lms = json::array();
  for (const auto& lm : s.world.landmarks) lms.push_back(landmark_to_json(lm));
  const auto& b = s.world.bounds;
  return {{"world", {{"seed", s.world.seed}, {"bounds", {b.x_min, b.y_min, b.x_max, b.y_max}}, {"landmarks", lms}}},
          {"sensor", sensor_to_json(s.sensor)},
          {"detector", detector_to_json(s.detector)},
          {"trajectory",
           {{"kind", s.trajectory.kind == sim::TrajectoryKind::kArc ? "arc" : "straight"},
            {"speed", s.trajectory.speed},
            {"curvature", s.trajectory.curvature},
            {"start", {s.trajectory.start.x, s.trajectory.start.y, s.trajectory.start.yaw}}}},
          {"n_frames", s.n_frames},
          {"dt", s.dt},
          {"seed", s.seed},
          {"oversegment_slabs", s.oversegment_slabs}};
}

Scenario load_scenario(const fs::path& path) { return scenario_from_json(read_json(path)); }

Scenario benchmark_scenario(std::uint64_t seed) {
  Scenario s;
  s.seed = seed;
  s.world = sim::gen_world(seed, 6, 4, {12.0, -14.0, 52.0, 14.0});
  s.detector.detection_probability = 0.7;
  s.detector.jitter_px = 3.0;
  s.trajectory.kind = sim::TrajectoryKind::kStraight;
  s.trajectory.speed = 0.5;
  s.n_frames = 100;
  s.dt = 0.1;
  return s;
}

std::vector<GroundTruthBox> ground_truth_boxes(const sim::WorldSpec& world, const sim::Pose& ego,
                                               const sim::SensorSpec& sensor, int frame) {
  std::vector<GroundTruthBox> out;
  for (const auto& lm : world.landmarks) {
    if (std::hypot(lm.x - ego.x, lm.y - ego.y) > sensor.max_range) continue;
    out.push_back({frame, lm.id, lm.cls, lm.bounds()});
  }
  return out;
}

std::vector<sim::Pose> scenario_poses(const Scenario& s) {
  return sim::ego_trajectory(s.trajectory, s.n_frames * s.dt, s.dt);
}

FrameInput simulate_frame(const Scenario& s, const std::vector<sim::Pose>& poses, int frame) {
  if (frame < 1 || frame > static_cast<int>(poses.size())) throw std::out_of_range("simulate_frame: bad frame");
  FrameInput in;
  in.frame = frame;
  in.pose = poses[static_cast<std::size_t>(frame - 1)];
  auto rendered = sim::render_frame(s.world, in.pose, s.sensor, sim::frame_seed(s.seed, frame, 1));
  in.cloud = std::move(rendered.cloud);
  in.labels = std::move(rendered.labels);
  in.detections = sim::simulate_detector(s.world, in.pose, s.detector, s.sensor, frame, s.seed).detections;
  in.ground_truth = ground_truth_boxes(s.world, in.pose, s.sensor, frame);
  if (s.oversegment_slabs > 0) in.instances = sim::oversegment_instances(in.cloud, in.labels, s.oversegment_slabs);
  return in;
}

void export_replay(const Scenario& s, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  save_calibration(s.sensor.camera, dir / "calibration.json");
  const auto poses = scenario_poses(s);
  auto pose_list = json::array();
  for (int f = 1; f <= static_cast<int>(poses.size()); ++f) {
    const auto& p = poses[static_cast<std::size_t>(f - 1)];
    pose_list.push_back({{"frame", f}, {"x", p.x}, {"y", p.y}, {"yaw", p.yaw}});
  }
  write_json(dir / "poses.json", {{"dt", s.dt}, {"mount_height", s.sensor.mount_height}, {"poses", pose_list}});
  write_json(dir / "scenario.json", scenario_to_json(s));
  for (int f = 1; f <= static_cast<int>(poses.size()); ++f) {
    const auto in = simulate_frame(s, poses, f);
    const auto stem = frame_stem(f);
    write_cloud(in.cloud, dir / (stem + ".bin"));
    write_json(dir / (stem + ".detections.json"), detections_to_json(in.detections));
    auto boxes = json::array();
    for (const auto& g : *in.ground_truth) {
      boxes.push_back({{"id", g.landmark_id}, {"class", std::string(class_name(g.cls))}, {"box", box_to_json(g.box)}});
    }
    write_json(dir / (stem + ".gt.json"), {{"frame", f}, {"boxes", boxes}});
  }
}

ReplayReader::ReplayReader(fs::path dir) : dir_(std::move(dir)) {
  if (!fs::is_directory(dir_)) throw IoError("replay directory not found: " + dir_.string());
  calibration_ = load_calibration(dir_ / "calibration.json");
  const std::regex pattern(R"(frame_(\d+)\.(bin|csv))");
  for (const auto& entry : fs::directory_iterator(dir_)) {
    std::smatch m;
    const auto name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern)) frames_.push_back(std::stoi(m[1].str()));
  }
  std::sort(frames_.begin(), frames_.end());
  frames_.erase(std::unique(frames_.begin(), frames_.end()), frames_.end());
  if (fs::exists(dir_ / "poses.json")) {
    const auto j = read_json(dir_ / "poses.json");
    dt_ = j.value("dt", dt_);
    mount_height_ = j.value("mount_height", 0.0);
    for (const auto& p : j.at("poses")) {
      poses_[p.at("frame").get<int>()] = {p.at("x").get<double>(), p.at("y").get<double>(), p.at("yaw").get<double>()};
    }
  }
}

FrameInput ReplayReader::load(int index) const {
  const int f = frames_.at(static_cast<std::size_t>(index));
  const auto stem = frame_stem(f);
  FrameInput in;
  in.frame = f;
  if (const auto it = poses_.find(f); it != poses_.end()) in.pose = it->second;
  in.cloud = fs::exists(dir_ / (stem + ".bin")) ? read_cloud(dir_ / (stem + ".bin")) : read_cloud(dir_ / (stem + ".csv"));
  if (fs::exists(dir_ / (stem + ".detections.json"))) in.detections = load_detections(dir_ / (stem + ".detections.json"));
  if (fs::exists(dir_ / (stem + ".gt.json"))) {
    const auto j = read_json(dir_ / (stem + ".gt.json"));
    std::vector<GroundTruthBox> gts;
    try {
      for (const auto& b : j.at("boxes")) gts.push_back({f, b.at("id").get<int>(), parse_class(b.at("class")), box_from_json(b.at("box"))});
    } catch (const json::exception& e) {
      throw ConfigError(stem + ".gt.json: " + e.what());
    }
    in.ground_truth = std::move(gts);
  }
  return in;
}

}  // namespace landmarks
