#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "landmarks/class_scores.hpp"
#include "landmarks/geometry.hpp"

namespace landmarks {

// Greedy Dirichlet Process Filter: ddCRP-based measurement-to-component
// association plus per-component Kalman filtering with a coordinated-turn
// process model.

/// Layout of the 9-D dynamical state.
enum StateIndex : int { kX = 0, kY, kZ, kVx, kVy, kOmega, kLength, kWidth, kHeight, kStateSize };

using StateVector = Eigen::Matrix<double, kStateSize, 1>;
using StateCovariance = Eigen::Matrix<double, kStateSize, kStateSize>;

struct Measurement {
  Box3D box;
  ClassScores class_proposal;
  PointCloud points;
  int frame_index = 0;
  int index_in_frame = 0;
};

struct GdpfConfig {
  double alpha = 0.1;  // ddCRP concentration; self-link weight

  // Process noise spectral densities, Q = diag(q) * dt.
  double q_position = 0.05;
  double q_velocity = 0.1;
  double q_turn_rate = 0.01;
  double q_dimension = 0.01;

  double sigma_position = 0.2;   // measurement noise std, meters
  double sigma_dimension = 0.3;  // measurement noise std, meters

  // New components: position/dimension variances are the measurement
  // variances times `init_inflation`.
  double init_inflation = 4.0;
  double init_velocity_std = 0.4;
  double init_turn_rate_std = 0.1;

  double existence_init = 0.3;
  double existence_hit = 0.25;
  double existence_miss_decay = 0.9;
  double existence_prune = 0.05;

  std::size_t max_accumulated_points = 12000;
  double omega_linear_threshold = 1e-6;
  double class_fusion_weight = 0.3;
  double min_dimension = 0.05;
  std::uint64_t seed = 0;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

struct Component {
  int id = 0;
  StateVector state = StateVector::Zero();
  StateCovariance cov = StateCovariance::Identity();
  double existence = 0.0;
  ClassScores class_scores;
  PointCloud accumulated_points;
  std::uint64_t points_seen = 0;
  std::optional<Box3D> last_associated_box;
  int frames_since_hit = 0;
  std::mt19937_64 rng;  // reservoir sampling of accumulated_points

  Vec3 position() const { return state.head<3>(); }
  Vec3 dimensions() const { return state.tail<3>(); }
  Box3D box() const { return Box3D(position(), dimensions()); }
};

/// Per-frame association outcome.
struct AssociationRecord {
  int frame = 0;
  std::vector<int> component_of;  // measurement index -> component id (z)
  // measurement index -> linked measurement index (j). A self-link marks a
  // newly created component; -1 marks a link to the component's predicted
  // state because it had no measurement yet in this frame.
  std::vector<int> linked_measurement;
  std::vector<int> new_component_ids;
  std::vector<std::size_t> processing_order;
};

/// Summary of one surviving component after a step.
struct TrackState {
  int id = 0;
  StateVector state = StateVector::Zero();
  double existence = 0.0;
  ClassScores class_scores;
  Box3D box;
  LandmarkClass label = LandmarkClass::kUnknown;
};

struct StepResult {
  AssociationRecord association;
  std::vector<TrackState> tracks;
};

enum class UpdateOutcome { kOk, kCovarianceReset };

// --- association scoring ---

/// Sigmoid of the maximum signed distance of `yi`'s center to `ym`'s sides.
double score_relation_from_distance(double phi_max);
double score_relation(const Box3D& yi, const Box3D& ym);

/// ddCRP link weight: score_relation for i != m, alpha for the self-link.
double ddcrp_weight(int i, int m, const Box3D& yi, const Box3D& ym, double alpha);

/// Elliptical x-y prior of component `c` for a measurement centered at `center`.
double cluster_prior(const Component& c, const Vec3& center);

struct CandidateWeight {
  double link = 0.0;   // ddCRP weight towards the component's representative measurement
  double prior = 0.0;  // cluster prior
};

/// Normalized association probabilities. Entry n of the result belongs to
/// candidates[n]; the final entry is the new-component slot with weight
/// alpha * new_prior. When every weight vanishes the new slot gets all mass.
std::vector<double> association_posterior(std::span<const CandidateWeight> candidates, double alpha,
                                          double new_prior = 1.0);

// --- component lifecycle ---

/// Base measure: state from the measurement box, zero velocity and turn rate.
Component init_component(const Measurement& y, int id, const GdpfConfig& cfg);

/// Coordinated-turn propagation of the state mean (no covariance).
StateVector propagate_state(const StateVector& x, double dt, double omega_linear_threshold);
/// Jacobian of propagate_state with respect to the state.
StateCovariance propagation_jacobian(const StateVector& x, double dt, double omega_linear_threshold);
StateCovariance process_noise(double dt, const GdpfConfig& cfg);

Component predict(Component c, double dt, const GdpfConfig& cfg);
Component update(Component c, const Measurement& y, const GdpfConfig& cfg, UpdateOutcome* outcome = nullptr);
Component update_existence(Component c, bool hit, const GdpfConfig& cfg);

/// Union box, concatenated points and averaged class proposal of the
/// measurements one component received in a frame.
Measurement merge_measurements(std::span<const Measurement* const> parts);

/// Assigns each measurement to the component with the highest posterior,
/// processing measurements by descending box volume. Components born along
/// the way are appended to `components` with ids starting at `next_id`,
/// which is advanced.
AssociationRecord associate_greedy(std::span<const Measurement> measurements, std::vector<Component>& components,
                                   const GdpfConfig& cfg, int& next_id);

class Gdpf {
 public:
  explicit Gdpf(GdpfConfig cfg = {});

  /// predict -> associate -> update -> existence -> prune.
  StepResult step(std::span<const Measurement> measurements, double dt);

  const std::vector<Component>& components() const { return components_; }
  Component* find(int id);
  const GdpfConfig& config() const { return cfg_; }
  int frame() const { return frame_; }
  int covariance_resets() const { return covariance_resets_; }

 private:
  GdpfConfig cfg_;
  std::vector<Component> components_;
  int next_id_ = 0;
  int frame_ = 0;
  int covariance_resets_ = 0;
};

TrackState summarize(const Component& c);

// {"frame": t, "components": [{"id", "state", "existence", "class_scores", "box"}]}
nlohmann::json track_dump_line(int frame, std::span<const TrackState> tracks);

}  // namespace landmarks
