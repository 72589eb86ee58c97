#include "landmarks/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "landmarks/errors.hpp"

namespace landmarks {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::uint64_t mix_seed(std::uint64_t seed, int frame, int id) {
  return sim::frame_seed(seed, frame, 0x5EEDull + static_cast<std::uint64_t>(id));
}

int majority_label(const std::vector<std::size_t>& indices, const std::vector<int>& labels) {
  std::map<int, std::size_t> counts;
  for (const auto i : indices) ++counts[labels[i]];
  int best = sim::kGroundLabel;
  std::size_t best_n = 0;
  for (const auto& [label, n] : counts) {
    if (n > best_n) {
      best = label;
      best_n = n;
    }
  }
  return best;
}

void read_gdpf(const json& j, GdpfConfig& g) {
  g.alpha = j.value("alpha", g.alpha);
  g.q_position = j.value("q_position", g.q_position);
  g.q_velocity = j.value("q_velocity", g.q_velocity);
  g.q_turn_rate = j.value("q_turn_rate", g.q_turn_rate);
  g.q_dimension = j.value("q_dimension", g.q_dimension);
  g.sigma_position = j.value("sigma_position", g.sigma_position);
  g.sigma_dimension = j.value("sigma_dimension", g.sigma_dimension);
  g.init_inflation = j.value("init_inflation", g.init_inflation);
  g.init_velocity_std = j.value("init_velocity_std", g.init_velocity_std);
  g.init_turn_rate_std = j.value("init_turn_rate_std", g.init_turn_rate_std);
  g.existence_init = j.value("existence_init", g.existence_init);
  g.existence_hit = j.value("existence_hit", g.existence_hit);
  g.existence_miss_decay = j.value("existence_miss_decay", g.existence_miss_decay);
  g.existence_prune = j.value("existence_prune", g.existence_prune);
  g.max_accumulated_points = j.value("max_accumulated_points", g.max_accumulated_points);
  g.omega_linear_threshold = j.value("omega_linear_threshold", g.omega_linear_threshold);
  g.class_fusion_weight = j.value("class_fusion_weight", g.class_fusion_weight);
  g.min_dimension = j.value("min_dimension", g.min_dimension);
}

}  // namespace

std::vector<std::string> PipelineConfig::validate() const {
  std::vector<std::string> warnings;
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in [0, 1]");
  if (n_p == 0) throw ConfigError("n_p must be positive");
  if (n_p != 512 && n_p != 1024) {
    warnings.push_back("n_p = " + std::to_string(n_p) + " is outside the studied values {512, 1024}");
  }
  if (classifier == ClassifierKind::kExternal && external_cmd.empty()) {
    throw ConfigError("external classifier selected but no --external-cmd given");
  }
  if (external_timeout_ms <= 0) throw ConfigError("external_timeout_ms must be positive");
  if (!(ground.cell > 0.0)) throw ConfigError("ground cell must be > 0");
  if (!(clustering.radius > 0.0) || clustering.min_points < 1) throw ConfigError("invalid clustering parameters");
  if (!(report_existence >= 0.0 && report_existence <= 1.0)) throw ConfigError("report_existence outside [0, 1]");
  if (export_stride < 1) throw ConfigError("export_stride must be >= 1");
  gdpf.validate();
  return warnings;
}

PipelineConfig pipeline_config_from_json(const json& j, PipelineConfig base) {
  try {
    PipelineConfig c = std::move(base);
    c.tau = j.value("tau", c.tau);
    c.n_p = j.value("n_p", c.n_p);
    if (j.contains("classifier")) c.classifier = classifier_kind_from_string(j.at("classifier").get<std::string>());
    c.external_cmd = j.value("external_cmd", c.external_cmd);
    c.external_timeout_ms = j.value("external_timeout_ms", c.external_timeout_ms);
    c.seed = j.value("seed", c.seed);
    c.report_existence = j.value("report_existence", c.report_existence);
    c.ground_anchor_gap = j.value("ground_anchor_gap", c.ground_anchor_gap);
    c.export_stride = j.value("export_stride", c.export_stride);
    if (j.contains("gdpf")) read_gdpf(j.at("gdpf"), c.gdpf);
    if (j.contains("clustering")) {
      const auto& cl = j.at("clustering");
      c.clustering.radius = cl.value("radius", c.clustering.radius);
      c.clustering.min_points = cl.value("min_points", c.clustering.min_points);
      c.ground.cell = cl.value("cell", c.ground.cell);
      c.ground.z_margin = cl.value("z_margin", c.ground.z_margin);
    }
    if (j.contains("scenario")) c.scenario_path = j.at("scenario").get<std::string>();
    if (j.contains("replay")) c.replay_dir = j.at("replay").get<std::string>();
    if (j.contains("metrics_out")) c.metrics_out = j.at("metrics_out").get<std::string>();
    if (j.contains("tracks_out")) c.tracks_out = j.at("tracks_out").get<std::string>();
    if (j.contains("export_components")) c.export_dir = j.at("export_components").get<std::string>();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("pipeline config: ") + e.what());
  }
}

PipelineConfig load_pipeline_config(const fs::path& path, PipelineConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  PipelineConfig c = pipeline_config_from_json(j, std::move(base));
  // Input paths in a config file are relative to the file.
  const fs::path dir = path.parent_path();
  if (c.scenario_path && c.scenario_path->is_relative()) c.scenario_path = dir / *c.scenario_path;
  if (c.replay_dir && c.replay_dir->is_relative()) c.replay_dir = dir / *c.replay_dir;
  return c;
}

Pipeline::Pipeline(PipelineConfig cfg, Calibration calibration, double mount_height)
    : cfg_(std::move(cfg)), calibration_(std::move(calibration)), mount_height_(mount_height), tracker_([&] {
        GdpfConfig g = cfg_.gdpf;
        g.seed = cfg_.seed;
        return g;
      }()) {
  cfg_.validate();
  if (cfg_.classifier == ClassifierKind::kExternal) {
    external_ = std::make_unique<ExternalClassifier>(cfg_.external_cmd,
                                                     std::chrono::milliseconds(cfg_.external_timeout_ms));
  }
}

int Pipeline::warnings() const { return external_ ? external_->warnings() : 0; }

FrameResult Pipeline::process(const FrameInput& input, double dt) {
  FrameResult out;
  out.frame = input.frame;
  const auto frame_start = Clock::now();

  // Segmentation.
  auto t0 = Clock::now();
  std::vector<Instance3D> instances;
  std::vector<std::size_t> kept;
  const GroundGrid grid(input.cloud, cfg_.ground);
  if (input.instances) {
    instances = *input.instances;
  } else {
    kept = grid.non_ground_indices(input.cloud);
    PointCloud objects;
    objects.reserve(kept.size());
    for (const auto i : kept) objects.push_back(input.cloud[i]);
    instances = cluster(objects, cfg_.clustering);
    for (auto& inst : instances) {
      for (auto& idx : inst.source_indices) idx = kept[idx];
    }
  }
  out.times.clustering_ms = elapsed_ms(t0);

  t0 = Clock::now();
  instances = generate_proposals(std::move(instances), input.detections, calibration_, {cfg_.tau});
  out.times.proposal_ms = elapsed_ms(t0);

  // Tracking runs in the world (odometry) frame.
  t0 = Clock::now();
  std::vector<Measurement> measurements;
  measurements.reserve(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    Measurement m;
    m.points.reserve(instances[i].points.size());
    for (const auto& p : instances[i].points) {
      const Vec3 w = sim::sensor_to_world(p.xyz(), input.pose, mount_height_);
      m.points.push_back({w.x(), w.y(), w.z(), p.intensity});
    }
    m.box = Box3D::bounding(m.points);
    if (cfg_.ground_anchor_gap >= 0.0) {
      const auto ground = grid.ground_below(instances[i].box);
      const double gap = instances[i].box.min().z() - (ground ? *ground : 0.0);
      if (ground && gap > 0.0 && gap <= cfg_.ground_anchor_gap) {
        Vec3 lo = m.box.min();
        lo.z() -= gap;
        m.box = Box3D::from_bounds(lo, m.box.max());
      }
    }
    m.class_proposal = instances[i].class_proposal.value_or(ClassScores::uniform());
    m.frame_index = input.frame;
    m.index_in_frame = static_cast<int>(i);
    measurements.push_back(std::move(m));
  }
  auto step = tracker_.step(measurements, dt);
  out.times.tracking_ms = elapsed_ms(t0);

  // Classification of every component's accumulated cloud, fused back.
  t0 = Clock::now();
  for (const auto& track : step.tracks) {
    Component* c = tracker_.find(track.id);
    if (c == nullptr || c->accumulated_points.empty()) continue;
    const auto sampled = sample_points(c->accumulated_points, cfg_.n_p, mix_seed(cfg_.seed, input.frame, c->id));
    ClassScores scores;
    if (external_) {
      const auto r = external_->classify(sampled, c->class_scores);
      if (r.degraded) ++out.degraded_classifications;
      scores = r.scores;
    } else {
      scores = classify_geometric(sampled, c->class_scores);
    }
    c->class_scores = fuse_class(c->class_scores, scores, tracker_.config().class_fusion_weight);
  }
  out.times.classification_ms = elapsed_ms(t0);

  for (const auto& c : tracker_.components()) {
    out.tracks.push_back(summarize(c));
    const auto& t = out.tracks.back();
    if (t.existence >= cfg_.report_existence && t.label != LandmarkClass::kUnknown) {
      out.reported.push_back({t.id, t.label, t.box});
    }
  }

  if (!input.labels.empty()) {
    out.measurement_labels.reserve(instances.size());
    for (const auto& inst : instances) out.measurement_labels.push_back(majority_label(inst.source_indices, input.labels));
  }
  out.association = std::move(step.association);
  out.instances = std::move(instances);
  out.times.total_ms = elapsed_ms(frame_start);
  return out;
}

RunSummary run_pipeline(const PipelineConfig& cfg_in, const Scenario* scenario_in) {
  PipelineConfig cfg = cfg_in;
  RunSummary summary;
  for (auto& w : cfg.validate()) summary.messages.push_back("warning: " + w);

  std::optional<Scenario> scenario;
  std::optional<ReplayReader> replay;
  if (scenario_in != nullptr) {
    scenario = *scenario_in;
  } else if (cfg.scenario_path) {
    scenario = load_scenario(*cfg.scenario_path);
  } else if (cfg.replay_dir) {
    replay.emplace(*cfg.replay_dir);
  } else {
    throw ConfigError("no input: give a scenario file or a replay directory");
  }

  const Calibration calib = scenario ? scenario->sensor.camera : replay->calibration();
  const double mount = scenario ? scenario->sensor.mount_height : replay->mount_height();
  const double dt = scenario ? scenario->dt : replay->dt();
  const int n_frames = scenario ? scenario->n_frames : replay->frame_count();
  const auto poses = scenario ? scenario_poses(*scenario) : std::vector<sim::Pose>{};

  std::map<int, LandmarkClass> landmark_classes;
  if (scenario) {
    for (const auto& lm : scenario->world.landmarks) landmark_classes[lm.id] = lm.cls;
  }
  if (cfg.export_dir && !scenario) throw ConfigError("--export-components needs a simulated scenario (ground-truth labels)");

  std::ofstream tracks_out;
  if (cfg.tracks_out) {
    tracks_out.open(*cfg.tracks_out);
    if (!tracks_out) throw IoError("cannot write " + cfg.tracks_out->string());
  }
  std::ofstream export_out;
  if (cfg.export_dir) {
    std::error_code ec;
    fs::create_directories(*cfg.export_dir, ec);
    export_out.open(*cfg.export_dir / "components.jsonl");
    if (!export_out) throw IoError("cannot write into " + cfg.export_dir->string());
  }

  Pipeline pipeline(cfg, calib, mount);
  MetricsAccumulator metrics;
  std::map<int, std::map<int, std::size_t>> component_labels;  // component -> landmark -> points

  for (int k = 0; k < n_frames; ++k) {
    const FrameInput in = scenario ? simulate_frame(*scenario, poses, k + 1) : replay->load(k);
    const FrameResult r = pipeline.process(in, dt);

    metrics.add_timing("clustering", r.times.clustering_ms);
    metrics.add_timing("proposal", r.times.proposal_ms);
    metrics.add_timing("tracking", r.times.tracking_ms);
    metrics.add_timing("classification", r.times.classification_ms);
    metrics.add_timing("total", r.times.total_ms);
    if (in.ground_truth) {
      summary.has_ground_truth = true;
      metrics.add_frame(r.reported, *in.ground_truth);
    }
    if (tracks_out.is_open()) tracks_out << track_dump_line(in.frame, r.tracks).dump() << '\n';

    if (export_out.is_open()) {
      for (std::size_t i = 0; i < r.measurement_labels.size(); ++i) {
        const int label = r.measurement_labels[i];
        if (label == sim::kGroundLabel) continue;
        component_labels[r.association.component_of[i]][label] += r.instances[i].points.size();
      }
      const bool export_now = (k + 1) % cfg.export_stride == 0 || k + 1 == n_frames;
      for (const auto& c : pipeline.tracker().components()) {
        if (!export_now || c.accumulated_points.empty()) continue;
        const auto hist = component_labels.find(c.id);
        if (hist == component_labels.end() || hist->second.empty()) continue;
        const auto best = std::max_element(hist->second.begin(), hist->second.end(),
                                           [](const auto& a, const auto& b) { return a.second < b.second; });
        const auto cls = landmark_classes.find(best->first);
        if (cls == landmark_classes.end()) continue;
        const auto sampled = sample_points(c.accumulated_points, cfg.n_p, mix_seed(cfg.seed ^ 0xE0ull, in.frame, c.id));
        json pts = json::array();
        for (const auto& p : sampled.points) pts.push_back({p.x, p.y, p.z, p.intensity});
        export_out << json{{"frame", in.frame},
                           {"component", c.id},
                           {"points", std::move(pts)},
                           {"prior", c.class_scores.values()},
                           {"true_class", std::string(class_name(cls->second))}}
                          .dump()
                   << '\n';
        ++summary.exported_records;
      }
    }
  }

  summary.frames = static_cast<std::size_t>(n_frames);
  summary.metrics = metrics.report();
  summary.false_positives = metrics.false_positives();
  summary.warnings = pipeline.warnings();
  if (summary.warnings > 0) {
    summary.metrics.notes.push_back("external classifier degraded " + std::to_string(summary.warnings) +
                                    " time(s); the prior was used instead");
  }
  if (!summary.has_ground_truth) summary.metrics.notes.push_back("no ground truth available; detection metrics are undefined");
  if (cfg.metrics_out) {
    std::ofstream out(*cfg.metrics_out);
    if (!out) throw IoError("cannot write " + cfg.metrics_out->string());
    out << metrics_to_json(summary.metrics).dump(2) << '\n';
  }
  return summary;
}

}  // namespace landmarks
