#include "landmarks/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <stdexcept>

namespace landmarks::sim {

namespace {

constexpr double kSeparation = 2.0;
constexpr double kVisibleFraction = 0.5;
constexpr double kReferenceRange = 10.0;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

double ellipsoid_area(double a, double b, double c) {
  constexpr double p = 1.6075;
  const double ap = std::pow(a, p);
  const double bp = std::pow(b, p);
  const double cp = std::pow(c, p);
  return 4.0 * std::numbers::pi * std::pow((ap * bp + ap * cp + bp * cp) / 3.0, 1.0 / p);
}

double range_density(double base, double range, const SensorSpec& s) {
  const double r = std::max(range, s.min_range);
  return base * std::pow(kReferenceRange / r, s.falloff);
}

// Area-uniform point on the ellipsoid with the given semi-axes, centered at origin.
Vec3 sample_ellipsoid(double a, double b, double c, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double g_max = std::max({b * c, a * c, a * b});
  while (true) {
    Vec3 u(normal(rng), normal(rng), normal(rng));
    const double n = u.norm();
    if (n < 1e-12) continue;
    u /= n;
    const double g = std::sqrt(std::pow(b * c * u.x(), 2) + std::pow(a * c * u.y(), 2) + std::pow(a * b * u.z(), 2));
    if (unit(rng) * g_max <= g) return {a * u.x(), b * u.y(), c * u.z()};
  }
}

std::size_t expected_count(double density, double area) {
  return static_cast<std::size_t>(std::llround(std::max(0.0, density * area * kVisibleFraction)));
}

}  // namespace

Box3D Landmark::bounds() const {
  return Box3D::from_bounds(Vec3(x - 0.5 * canopy_diameter, y - 0.5 * canopy_diameter, 0.0),
                            Vec3(x + 0.5 * canopy_diameter, y + 0.5 * canopy_diameter, total_height()));
}

std::uint64_t frame_seed(std::uint64_t seed, int frame, std::uint64_t stream) {
  return splitmix(splitmix(seed ^ splitmix(static_cast<std::uint64_t>(frame) + 1)) ^ (stream * 0xD1B54A32D192ED03ull));
}

WorldSpec gen_world(std::uint64_t seed, int n_trees, int n_bushes, const Bounds2D& bounds) {
  if (n_trees < 0 || n_bushes < 0) throw std::invalid_argument("gen_world: counts must be >= 0");
  if (!(bounds.x_max > bounds.x_min && bounds.y_max > bounds.y_min)) {
    throw std::invalid_argument("gen_world: empty bounds");
  }
  WorldSpec world;
  world.bounds = bounds;
  world.seed = seed;
  const int n = n_trees + n_bushes;
  std::mt19937_64 rng(frame_seed(seed, -1, 7));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  for (int i = 0; i < n; ++i) {
    Landmark lm;
    lm.id = i;
    lm.cls = i < n_trees ? LandmarkClass::kTree : LandmarkClass::kBush;
    if (lm.cls == LandmarkClass::kTree) {
      lm.canopy_height = uniform(3.0, 8.0);
      lm.canopy_diameter = uniform(1.5, 4.0);
      lm.trunk_height = uniform(1.0, 2.5);
      lm.trunk_diameter = uniform(0.2, 0.4);
    } else {
      lm.canopy_height = uniform(0.5, 2.0);
      lm.canopy_diameter = uniform(1.0, 4.0);
    }
    const double r = 0.5 * lm.canopy_diameter;
    int rejections = 0;
    while (true) {
      lm.x = uniform(bounds.x_min + r, bounds.x_max - r);
      lm.y = uniform(bounds.y_min + r, bounds.y_max - r);
      const bool clear = std::all_of(world.landmarks.begin(), world.landmarks.end(), [&](const Landmark& o) {
        return std::hypot(o.x - lm.x, o.y - lm.y) >= r + 0.5 * o.canopy_diameter + kSeparation;
      });
      const bool inside = lm.x - r >= bounds.x_min && lm.x + r <= bounds.x_max && lm.y - r >= bounds.y_min &&
                          lm.y + r <= bounds.y_max;
      if (clear && inside) break;
      if (++rejections >= 10 * n) {
        throw PlacementFailure("gen_world: could not place landmark " + std::to_string(i) +
                               "; bounds too small for " + std::to_string(n) + " landmarks");
      }
    }
    world.landmarks.push_back(lm);
  }
  return world;
}

std::vector<Pose> ego_trajectory(const TrajectorySpec& spec, double duration, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("ego_trajectory: dt must be > 0");
  const auto n = static_cast<std::size_t>(std::llround(duration / dt));
  std::vector<Pose> poses;
  poses.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt;
    const double s = spec.speed * t;
    Pose p = spec.start;
    if (spec.kind == TrajectoryKind::kArc && spec.curvature != 0.0) {
      const double k = spec.curvature;
      const double yaw = spec.start.yaw + k * s;
      p.x = spec.start.x + (std::sin(yaw) - std::sin(spec.start.yaw)) / k;
      p.y = spec.start.y - (std::cos(yaw) - std::cos(spec.start.yaw)) / k;
      p.yaw = yaw;
    } else {
      p.x = spec.start.x + s * std::cos(spec.start.yaw);
      p.y = spec.start.y + s * std::sin(spec.start.yaw);
    }
    poses.push_back(p);
  }
  return poses;
}

Vec3 world_to_sensor(const Vec3& p, const Pose& ego, double mount_height) {
  const double dx = p.x() - ego.x;
  const double dy = p.y() - ego.y;
  const double c = std::cos(ego.yaw);
  const double s = std::sin(ego.yaw);
  return {c * dx + s * dy, -s * dx + c * dy, p.z() - mount_height};
}

Vec3 sensor_to_world(const Vec3& p, const Pose& ego, double mount_height) {
  const double c = std::cos(ego.yaw);
  const double s = std::sin(ego.yaw);
  return {ego.x + c * p.x() - s * p.y(), ego.y + s * p.x() + c * p.y(), p.z() + mount_height};
}

RenderedFrame render_frame(const WorldSpec& world, const Pose& ego, const SensorSpec& sensor, std::uint64_t seed) {
  RenderedFrame out;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto emit = [&](const Vec3& world_point, double intensity, int label, std::mt19937_64& rng) {
    Vec3 q = world_point;
    if (sensor.noise_std > 0.0) {
      q += sensor.noise_std * Vec3(normal(rng), normal(rng), normal(rng));
    }
    const Vec3 s = world_to_sensor(q, ego, sensor.mount_height);
    out.cloud.push_back({s.x(), s.y(), s.z(), std::clamp(intensity, 0.0, 1.0)});
    out.labels.push_back(label);
  };

  for (const auto& lm : world.landmarks) {
    const double range = std::hypot(lm.x - ego.x, lm.y - ego.y);
    if (range > sensor.max_range) continue;
    std::mt19937_64 rng(splitmix(seed ^ splitmix(static_cast<std::uint64_t>(lm.id) + 11)));
    const double density = range_density(sensor.density_at_10m, range, sensor);
    const double mean_intensity = lm.cls == LandmarkClass::kTree ? 0.6 : 0.4;

    const double a = 0.5 * lm.canopy_diameter;
    const double c = 0.5 * lm.canopy_height;
    const Vec3 center = lm.canopy_center();
    const std::size_t canopy_n = expected_count(density, ellipsoid_area(a, a, c));
    for (std::size_t i = 0; i < canopy_n; ++i) {
      emit(center + sample_ellipsoid(a, a, c, rng), mean_intensity + 0.1 * normal(rng), lm.id, rng);
    }
    if (lm.trunk_height > 0.0 && lm.trunk_diameter > 0.0) {
      const double tr = 0.5 * lm.trunk_diameter;
      const std::size_t trunk_n =
          expected_count(density, 2.0 * std::numbers::pi * tr * lm.trunk_height);
      for (std::size_t i = 0; i < trunk_n; ++i) {
        const double phi = 2.0 * std::numbers::pi * unit(rng);
        const Vec3 p(lm.x + tr * std::cos(phi), lm.y + tr * std::sin(phi), lm.trunk_height * unit(rng));
        emit(p, mean_intensity + 0.1 * normal(rng), lm.id, rng);
      }
    }
  }

  // Ground annulus around the ego with the same range falloff.
  std::mt19937_64 rng(splitmix(seed ^ 0xA5A5A5A5ull));
  const double r0 = sensor.min_range;
  const double r1 = sensor.max_range;
  const double f = sensor.falloff;
  const double scale = sensor.ground_density_at_10m * std::pow(kReferenceRange, f) * 2.0 * std::numbers::pi;
  const bool log_case = std::abs(f - 2.0) < 1e-12;
  const double mass = log_case ? scale * std::log(r1 / r0)
                               : scale * (std::pow(r1, 2.0 - f) - std::pow(r0, 2.0 - f)) / (2.0 - f);
  const auto ground_n = static_cast<std::size_t>(std::llround(std::max(0.0, mass)));
  for (std::size_t i = 0; i < ground_n; ++i) {
    const double u = unit(rng);
    const double r = log_case ? r0 * std::pow(r1 / r0, u)
                              : std::pow(std::pow(r0, 2.0 - f) + u * (std::pow(r1, 2.0 - f) - std::pow(r0, 2.0 - f)),
                                         1.0 / (2.0 - f));
    const double phi = 2.0 * std::numbers::pi * unit(rng);
    const Vec3 p(ego.x + r * std::cos(phi), ego.y + r * std::sin(phi), 0.0);
    emit(p, 0.2 + 0.05 * normal(rng), kGroundLabel, rng);
  }
  return out;
}

DetectorOutput simulate_detector(const WorldSpec& world, const Pose& ego, const DetectorSpec& detector,
                                 const SensorSpec& sensor, int frame, std::uint64_t seed) {
  const auto& cam = sensor.camera;
  const double w = cam.image_width;
  const double h = cam.image_height;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  DetectorOutput out;

  for (const auto& lm : world.landmarks) {
    if (std::hypot(lm.x - ego.x, lm.y - ego.y) > sensor.max_range) continue;
    const Box3D world_box = lm.bounds();
    // Footprints are circular, so the sensor-frame bound keeps its dimensions.
    const Box3D sensor_box(world_to_sensor(world_box.center, ego, sensor.mount_height), world_box.dims);
    bool all_front = true;
    for (const auto& corner : sensor_box.corners()) {
      if (!project_point(corner, cam.lidar_to_camera, cam.projection)) all_front = false;
    }
    const auto center_px = project_point(sensor_box.center, cam.lidar_to_camera, cam.projection);
    if (!all_front || !center_px || center_px->u < 0 || center_px->u > w || center_px->v < 0 || center_px->v > h) {
      continue;
    }
    const Rect2D gt = project_box(sensor_box, cam.lidar_to_camera, cam.projection)->clipped(w, h);
    if (gt.area() <= 0.0) continue;
    out.ground_truth.push_back({lm.id, lm.cls, gt});

    // Each landmark draws from its own stream so dropouts do not shift others.
    std::mt19937_64 rng(frame_seed(seed, frame, 1000 + static_cast<std::uint64_t>(lm.id)));
    const bool dropped = std::any_of(detector.dropouts.begin(), detector.dropouts.end(), [&](const DropoutWindow& d) {
      return d.landmark_id == lm.id && frame >= d.first_frame && frame <= d.last_frame;
    });
    const bool hit = unit(rng) < detector.detection_probability;
    if (dropped || !hit) continue;

    const double j = detector.jitter_px;
    Rect2D r{gt.x_min + j * normal(rng), gt.y_min + j * normal(rng), gt.x_max + j * normal(rng),
             gt.y_max + j * normal(rng)};
    if (r.x_min > r.x_max) std::swap(r.x_min, r.x_max);
    if (r.y_min > r.y_max) std::swap(r.y_min, r.y_max);
    r = r.clipped(w, h);
    const double score = std::clamp(detector.score_mean + detector.score_std * normal(rng), 0.05, 1.0);
    out.detections.push_back({r, lm.cls, score});
  }
  return out;
}

std::vector<Instance3D> oversegment_instances(const PointCloud& cloud, const std::vector<int>& labels, int slabs) {
  if (slabs < 1) throw std::invalid_argument("oversegment_instances: slabs must be >= 1");
  if (labels.size() != cloud.size()) throw std::invalid_argument("oversegment_instances: label count mismatch");
  std::map<int, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (labels[i] != kGroundLabel) by_label[labels[i]].push_back(i);
  }
  std::vector<Instance3D> out;
  for (const auto& [label, idx] : by_label) {
    double lo = cloud[idx.front()].x;
    double hi = lo;
    for (const auto i : idx) {
      lo = std::min(lo, cloud[i].x);
      hi = std::max(hi, cloud[i].x);
    }
    const double width = std::max(hi - lo, 1e-9) / slabs;
    std::vector<std::vector<std::size_t>> parts(static_cast<std::size_t>(slabs));
    for (const auto i : idx) {
      const int s = std::min(slabs - 1, static_cast<int>((cloud[i].x - lo) / width));
      parts[static_cast<std::size_t>(s)].push_back(i);
    }
    for (auto& part : parts) {
      if (part.empty()) continue;
      Instance3D inst;
      inst.id = static_cast<int>(out.size());
      for (const auto i : part) inst.points.push_back(cloud[i]);
      inst.source_indices = std::move(part);
      inst.box = Box3D::bounding(inst.points);
      out.push_back(std::move(inst));
    }
  }
  return out;
}

}  // namespace landmarks::sim
