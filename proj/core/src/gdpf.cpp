#include "landmarks/gdpf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "landmarks/errors.hpp"

namespace landmarks {

namespace {

constexpr double kSigmoidSlope = 0.75;
constexpr std::array<int, 6> kMeasuredStates = {kX, kY, kZ, kLength, kWidth, kHeight};

using MeasurementVector = Eigen::Matrix<double, 6, 1>;
using MeasurementMatrix = Eigen::Matrix<double, 6, kStateSize>;
using MeasurementCovariance = Eigen::Matrix<double, 6, 6>;

MeasurementMatrix measurement_matrix() {
  MeasurementMatrix h = MeasurementMatrix::Zero();
  for (int r = 0; r < 6; ++r) h(r, kMeasuredStates[static_cast<std::size_t>(r)]) = 1.0;
  return h;
}

MeasurementCovariance measurement_noise(const GdpfConfig& cfg) {
  MeasurementCovariance r = MeasurementCovariance::Zero();
  const double p2 = cfg.sigma_position * cfg.sigma_position;
  const double d2 = cfg.sigma_dimension * cfg.sigma_dimension;
  r.diagonal() << p2, p2, p2, d2, d2, d2;
  return r;
}

StateCovariance initial_covariance(const GdpfConfig& cfg) {
  StateCovariance p = StateCovariance::Zero();
  const double p2 = cfg.init_inflation * cfg.sigma_position * cfg.sigma_position;
  const double d2 = cfg.init_inflation * cfg.sigma_dimension * cfg.sigma_dimension;
  const double v2 = cfg.init_velocity_std * cfg.init_velocity_std;
  const double w2 = cfg.init_turn_rate_std * cfg.init_turn_rate_std;
  p.diagonal() << p2, p2, p2, v2, v2, w2, d2, d2, d2;
  return p;
}

void symmetrize(StateCovariance& p) { p = 0.5 * (p + p.transpose()).eval(); }

void clamp_dimensions(StateVector& x, double min_dim) {
  for (int i = kLength; i <= kHeight; ++i) x[i] = std::max(x[i], min_dim);
}

std::uint64_t component_seed(std::uint64_t seed, int id) {
  return seed ^ (0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(id) + 1));
}

void accumulate_points(Component& c, const PointCloud& incoming, std::size_t cap) {
  if (cap == 0) return;
  for (const auto& p : incoming) {
    ++c.points_seen;
    if (c.accumulated_points.size() < cap) {
      c.accumulated_points.push_back(p);
      continue;
    }
    std::uniform_int_distribution<std::uint64_t> pick(0, c.points_seen - 1);
    const auto slot = pick(c.rng);
    if (slot < cap) c.accumulated_points[static_cast<std::size_t>(slot)] = p;
  }
}

Box3D predicted_box(const Component& c) { return c.box(); }

}  // namespace

void GdpfConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("gdpf config: ") + what);
  };
  require(alpha >= 0.0 && std::isfinite(alpha), "alpha must be finite and >= 0");
  require(q_position > 0 && q_velocity > 0 && q_turn_rate > 0 && q_dimension > 0, "process noise must be > 0");
  require(sigma_position > 0 && sigma_dimension > 0, "measurement noise must be > 0");
  require(init_inflation > 0 && init_velocity_std > 0 && init_turn_rate_std > 0, "initial spread must be > 0");
  require(existence_init >= 0 && existence_init <= 1, "existence_init outside [0, 1]");
  require(existence_hit >= 0 && existence_hit <= 1, "existence_hit outside [0, 1]");
  require(existence_miss_decay >= 0 && existence_miss_decay <= 1, "existence_miss_decay outside [0, 1]");
  require(existence_prune > 0 && existence_prune < 1, "existence_prune outside (0, 1)");
  require(omega_linear_threshold >= 0, "omega_linear_threshold must be >= 0");
  require(class_fusion_weight >= 0 && class_fusion_weight <= 1, "class_fusion_weight outside [0, 1]");
  require(min_dimension > 0, "min_dimension must be > 0");
}

double score_relation_from_distance(double phi_max) {
  return 1.0 / (1.0 + std::exp(-kSigmoidSlope * (phi_max + 1.0)));
}

double score_relation(const Box3D& yi, const Box3D& ym) {
  return score_relation_from_distance(max_signed_distance(yi.center, ym));
}

double ddcrp_weight(int i, int m, const Box3D& yi, const Box3D& ym, double alpha) {
  return i == m ? alpha : score_relation(yi, ym);
}

double cluster_prior(const Component& c, const Vec3& center) {
  const double a = c.state[kLength] + std::sqrt(std::max(0.0, c.cov(kLength, kLength)));
  const double b = c.state[kWidth] + std::sqrt(std::max(0.0, c.cov(kWidth, kWidth)));
  const double dx = c.state[kX] - center.x();
  const double dy = c.state[kY] - center.y();
  return std::exp(-(dx * dx / a + dy * dy / b));
}

std::vector<double> association_posterior(std::span<const CandidateWeight> candidates, double alpha,
                                          double new_prior) {
  std::vector<double> p(candidates.size() + 1);
  double total = 0.0;
  for (std::size_t n = 0; n < candidates.size(); ++n) {
    p[n] = candidates[n].link * candidates[n].prior;
    total += p[n];
  }
  p.back() = alpha * new_prior;
  total += p.back();
  if (!(total > 0.0)) {
    std::fill(p.begin(), p.end(), 0.0);
    p.back() = 1.0;
    return p;
  }
  for (double& v : p) v /= total;
  return p;
}

Component init_component(const Measurement& y, int id, const GdpfConfig& cfg) {
  Component c;
  c.id = id;
  c.state.setZero();
  c.state.head<3>() = y.box.center;
  c.state.tail<3>() = y.box.dims;
  clamp_dimensions(c.state, cfg.min_dimension);
  c.cov = initial_covariance(cfg);
  c.existence = cfg.existence_init;
  c.class_scores = y.class_proposal;
  c.rng.seed(component_seed(cfg.seed, id));
  c.last_associated_box = y.box;
  accumulate_points(c, y.points, cfg.max_accumulated_points);
  return c;
}

StateVector propagate_state(const StateVector& x, double dt, double omega_linear_threshold) {
  StateVector out = x;
  const double vx = x[kVx];
  const double vy = x[kVy];
  const double w = x[kOmega];
  if (std::abs(w) < omega_linear_threshold || w == 0.0) {
    out[kX] += vx * dt;
    out[kY] += vy * dt;
    return out;
  }
  const double s = std::sin(w * dt);
  const double half = std::sin(0.5 * w * dt);
  const double one_minus_c = 2.0 * half * half;
  const double c = 1.0 - one_minus_c;
  out[kX] += (vx * s - vy * one_minus_c) / w;
  out[kY] += (vx * one_minus_c + vy * s) / w;
  out[kVx] = vx * c - vy * s;
  out[kVy] = vx * s + vy * c;
  return out;
}

StateCovariance propagation_jacobian(const StateVector& x, double dt, double omega_linear_threshold) {
  StateCovariance f = StateCovariance::Identity();
  const double vx = x[kVx];
  const double vy = x[kVy];
  const double w = x[kOmega];
  if (std::abs(w) < omega_linear_threshold || w == 0.0) {
    f(kX, kVx) = dt;
    f(kY, kVy) = dt;
    // Limits of the coordinated-turn derivatives as omega -> 0.
    f(kX, kOmega) = -0.5 * vy * dt * dt;
    f(kY, kOmega) = 0.5 * vx * dt * dt;
    f(kVx, kOmega) = -vy * dt;
    f(kVy, kOmega) = vx * dt;
    return f;
  }
  const double s = std::sin(w * dt);
  const double half = std::sin(0.5 * w * dt);
  const double one_minus_c = 2.0 * half * half;
  const double c = 1.0 - one_minus_c;

  f(kX, kVx) = s / w;
  f(kX, kVy) = -one_minus_c / w;
  f(kY, kVx) = one_minus_c / w;
  f(kY, kVy) = s / w;
  f(kVx, kVx) = c;
  f(kVx, kVy) = -s;
  f(kVy, kVx) = s;
  f(kVy, kVy) = c;

  f(kX, kOmega) = ((vx * dt * c - vy * dt * s) * w - (vx * s - vy * one_minus_c)) / (w * w);
  f(kY, kOmega) = ((vx * dt * s + vy * dt * c) * w - (vx * one_minus_c + vy * s)) / (w * w);
  f(kVx, kOmega) = -dt * (vx * s + vy * c);
  f(kVy, kOmega) = dt * (vx * c - vy * s);
  return f;
}

StateCovariance process_noise(double dt, const GdpfConfig& cfg) {
  StateCovariance q = StateCovariance::Zero();
  q.diagonal() << cfg.q_position, cfg.q_position, cfg.q_position, cfg.q_velocity, cfg.q_velocity,
      cfg.q_turn_rate, cfg.q_dimension, cfg.q_dimension, cfg.q_dimension;
  return q * dt;
}

Component predict(Component c, double dt, const GdpfConfig& cfg) {
  if (!(dt > 0.0)) throw std::invalid_argument("predict: dt must be > 0");
  const StateCovariance f = propagation_jacobian(c.state, dt, cfg.omega_linear_threshold);
  c.state = propagate_state(c.state, dt, cfg.omega_linear_threshold);
  c.cov = f * c.cov * f.transpose() + process_noise(dt, cfg);
  symmetrize(c.cov);
  return c;
}

Component update(Component c, const Measurement& y, const GdpfConfig& cfg, UpdateOutcome* outcome) {
  if (outcome) *outcome = UpdateOutcome::kOk;
  const MeasurementMatrix h = measurement_matrix();
  const MeasurementCovariance r = measurement_noise(cfg);

  MeasurementVector z;
  z << y.box.center, y.box.dims;
  const MeasurementVector innovation = z - h * c.state;
  const MeasurementCovariance s = h * c.cov * h.transpose() + r;

  const Eigen::LLT<MeasurementCovariance> llt(s);
  if (llt.info() != Eigen::Success || !s.allFinite()) {
    // Ill-conditioned covariance: restart from the measurement.
    c.state.head<3>() = y.box.center;
    c.state.tail<3>() = y.box.dims;
    c.cov = initial_covariance(cfg);
    if (outcome) *outcome = UpdateOutcome::kCovarianceReset;
  } else {
    const Eigen::Matrix<double, kStateSize, 6> gain = llt.solve(h * c.cov).transpose();
    c.state += gain * innovation;
    const StateCovariance i_kh = StateCovariance::Identity() - gain * h;
    c.cov = i_kh * c.cov * i_kh.transpose() + gain * r * gain.transpose();
    symmetrize(c.cov);
  }
  clamp_dimensions(c.state, cfg.min_dimension);

  accumulate_points(c, y.points, cfg.max_accumulated_points);
  c.class_scores = fuse_class(c.class_scores, y.class_proposal, cfg.class_fusion_weight);
  c.last_associated_box = y.box;
  return c;
}

Component update_existence(Component c, bool hit, const GdpfConfig& cfg) {
  if (hit) {
    c.existence = std::min(1.0, c.existence + cfg.existence_hit);
    c.frames_since_hit = 0;
  } else {
    c.existence *= cfg.existence_miss_decay;
    ++c.frames_since_hit;
  }
  return c;
}

Measurement merge_measurements(std::span<const Measurement* const> parts) {
  if (parts.empty()) throw std::invalid_argument("merge_measurements: no parts");
  if (parts.size() == 1) return *parts.front();
  Measurement out = *parts.front();
  Vec3 lo = out.box.min();
  Vec3 hi = out.box.max();
  std::array<double, kNumSlots> scores{};
  for (const Measurement* m : parts) {
    lo = lo.cwiseMin(m->box.min());
    hi = hi.cwiseMax(m->box.max());
    for (std::size_t s = 0; s < kNumSlots; ++s) scores[s] += m->class_proposal[s];
    if (m != parts.front()) out.points.insert(out.points.end(), m->points.begin(), m->points.end());
  }
  out.box = Box3D::from_bounds(lo, hi);
  out.class_proposal = ClassScores(scores);
  return out;
}

AssociationRecord associate_greedy(std::span<const Measurement> measurements, std::vector<Component>& components,
                                   const GdpfConfig& cfg, int& next_id) {
  const std::size_t n = measurements.size();
  AssociationRecord rec;
  rec.frame = n > 0 ? measurements.front().frame_index : 0;
  rec.component_of.assign(n, -1);
  rec.linked_measurement.assign(n, -1);

  rec.processing_order.resize(n);
  std::iota(rec.processing_order.begin(), rec.processing_order.end(), std::size_t{0});
  std::stable_sort(rec.processing_order.begin(), rec.processing_order.end(), [&](std::size_t a, std::size_t b) {
    return measurements[a].box.volume() > measurements[b].box.volume();
  });

  // Most recent measurement index associated to each component in this frame.
  std::map<int, int> representative;
  std::vector<CandidateWeight> weights;

  for (const std::size_t i : rec.processing_order) {
    const Measurement& y = measurements[i];
    weights.clear();
    weights.reserve(components.size());
    for (const auto& c : components) {
      const auto rep = representative.find(c.id);
      const Box3D& anchor = rep != representative.end() ? measurements[static_cast<std::size_t>(rep->second)].box
                                                        : predicted_box(c);
      const int m = rep != representative.end() ? rep->second : -1;
      weights.push_back({ddcrp_weight(static_cast<int>(i), m, y.box, anchor, cfg.alpha), cluster_prior(c, y.box.center)});
    }
    const auto posterior = association_posterior(weights, cfg.alpha);

    // Components are ordered by id and the new slot is last, so a strict
    // comparison resolves ties towards the lower id.
    std::size_t best = posterior.size() - 1;
    double best_p = posterior.back();
    for (std::size_t k = 0; k < components.size(); ++k) {
      if (posterior[k] > best_p || (posterior[k] == best_p && best == posterior.size() - 1)) {
        best = k;
        best_p = posterior[k];
      }
    }

    if (best == posterior.size() - 1) {
      const int id = next_id++;
      components.push_back(init_component(y, id, cfg));
      rec.component_of[i] = id;
      rec.linked_measurement[i] = static_cast<int>(i);
      rec.new_component_ids.push_back(id);
      representative[id] = static_cast<int>(i);
    } else {
      const int id = components[best].id;
      const auto rep = representative.find(id);
      rec.component_of[i] = id;
      rec.linked_measurement[i] = rep != representative.end() ? rep->second : -1;
      representative[id] = static_cast<int>(i);
    }
  }
  return rec;
}

Gdpf::Gdpf(GdpfConfig cfg) : cfg_(cfg) { cfg_.validate(); }

Component* Gdpf::find(int id) {
  const auto it = std::find_if(components_.begin(), components_.end(), [id](const Component& c) { return c.id == id; });
  return it == components_.end() ? nullptr : &*it;
}

StepResult Gdpf::step(std::span<const Measurement> measurements, double dt) {
  ++frame_;
  if (dt > 0.0) {
    for (auto& c : components_) c = predict(std::move(c), dt, cfg_);
  }

  StepResult result;
  result.association = associate_greedy(measurements, components_, cfg_, next_id_);
  result.association.frame = frame_;

  std::map<int, std::vector<const Measurement*>> hits;
  for (const std::size_t i : result.association.processing_order) {
    hits[result.association.component_of[i]].push_back(&measurements[i]);
  }
  const auto& born = result.association.new_component_ids;

  for (auto& c : components_) {
    const auto it = hits.find(c.id);
    if (it == hits.end()) {
      c = update_existence(std::move(c), false, cfg_);
      continue;
    }
    const Measurement merged = merge_measurements(it->second);
    if (std::find(born.begin(), born.end(), c.id) != born.end()) {
      // The birth measurement already seeded the component; re-seed from the
      // merged fragments instead of counting it twice.
      const double existence = c.existence;
      c = init_component(merged, c.id, cfg_);
      c.existence = existence;
    } else {
      UpdateOutcome outcome = UpdateOutcome::kOk;
      c = update(std::move(c), merged, cfg_, &outcome);
      if (outcome == UpdateOutcome::kCovarianceReset) ++covariance_resets_;
    }
    c = update_existence(std::move(c), true, cfg_);
  }

  std::erase_if(components_, [this](const Component& c) { return c.existence < cfg_.existence_prune; });

  result.tracks.reserve(components_.size());
  for (const auto& c : components_) result.tracks.push_back(summarize(c));
  return result;
}

TrackState summarize(const Component& c) {
  return {c.id, c.state, c.existence, c.class_scores, c.box(), c.class_scores.argmax()};
}

nlohmann::json track_dump_line(int frame, std::span<const TrackState> tracks) {
  auto comps = nlohmann::json::array();
  for (const auto& t : tracks) {
    std::vector<double> state(t.state.data(), t.state.data() + kStateSize);
    comps.push_back({{"id", t.id},
                     {"state", state},
                     {"existence", t.existence},
                     {"class_scores", t.class_scores.values()},
                     {"box", {t.box.center.x(), t.box.center.y(), t.box.center.z(), t.box.dims.x(), t.box.dims.y(),
                              t.box.dims.z()}}});
  }
  return {{"frame", frame}, {"components", comps}};
}

}  // namespace landmarks
