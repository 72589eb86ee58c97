#include "landmarks/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "landmarks/errors.hpp"

namespace landmarks {

namespace {

// Feature-rule weights. Positive logit favours tree over bush.
constexpr double kHeightPivot = 3.0;
constexpr double kHeightWeight = 1.5;
constexpr double kAspectPivot = 1.0;
constexpr double kAspectWeight = 1.0;
constexpr double kTopPivot = 1.0 / 3.0;
constexpr double kTopWeight = 3.0;
constexpr double kIntensityPivot = 0.5;
constexpr double kIntensityWeight = 6.0;
constexpr double kUnknownLikelihood = 0.05;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

std::string_view to_string(ClassifierKind kind) {
  return kind == ClassifierKind::kGeometric ? "geom" : "external";
}

ClassifierKind classifier_kind_from_string(std::string_view s) {
  if (s == "geom" || s == "geometric" || s == "geometric-baseline") return ClassifierKind::kGeometric;
  if (s == "external" || s == "external-protocol") return ClassifierKind::kExternal;
  throw ConfigError("unknown classifier kind '" + std::string(s) + "' (expected geom or external)");
}

SampledCloud sample_points(std::span<const Point4> points, std::size_t n_p, std::uint64_t seed) {
  if (points.empty()) throw std::invalid_argument("sample_points: empty cloud");
  if (n_p == 0) throw std::invalid_argument("sample_points: n_p must be >= 1");

  std::mt19937_64 rng(seed);
  SampledCloud out;
  out.source_count = points.size();
  out.source_indices.reserve(n_p);
  if (points.size() >= n_p) {
    // Partial Fisher-Yates.
    std::vector<std::size_t> idx(points.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < n_p; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
      std::swap(idx[i], idx[pick(rng)]);
      out.source_indices.push_back(idx[i]);
    }
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
    for (std::size_t i = 0; i < n_p; ++i) out.source_indices.push_back(pick(rng));
  }
  out.points.reserve(n_p);
  for (const auto i : out.source_indices) out.points.push_back(points[i]);
  return out;
}

GeometricFeatures geometric_features(std::span<const Point4> points) {
  GeometricFeatures f;
  if (points.empty()) return f;
  double z_lo = points.front().z;
  double z_hi = z_lo;
  double cx = 0.0;
  double cy = 0.0;
  double intensity = 0.0;
  for (const auto& p : points) {
    z_lo = std::min(z_lo, p.z);
    z_hi = std::max(z_hi, p.z);
    cx += p.x;
    cy += p.y;
    intensity += p.intensity;
  }
  const double n = static_cast<double>(points.size());
  cx /= n;
  cy /= n;
  double r2 = 0.0;
  std::size_t top = 0;
  const double top_cut = z_lo + 2.0 * (z_hi - z_lo) / 3.0;
  for (const auto& p : points) {
    r2 += (p.x - cx) * (p.x - cx) + (p.y - cy) * (p.y - cy);
    if (p.z >= top_cut) ++top;
  }
  f.height = z_hi - z_lo;
  f.footprint = 2.0 * std::sqrt(2.0) * std::sqrt(r2 / n);
  f.aspect = f.height / std::max(f.footprint, 1e-3);
  f.top_fraction = static_cast<double>(top) / n;
  f.mean_intensity = intensity / n;
  return f;
}

std::array<double, kNumSlots> geometric_likelihood(const GeometricFeatures& f) {
  const double logit = kHeightWeight * (f.height - kHeightPivot) + kAspectWeight * (f.aspect - kAspectPivot) +
                       kTopWeight * (f.top_fraction - kTopPivot) +
                       kIntensityWeight * (f.mean_intensity - kIntensityPivot);
  std::array<double, kNumSlots> l{};
  l[static_cast<std::size_t>(LandmarkClass::kTree)] = sigmoid(logit);
  l[static_cast<std::size_t>(LandmarkClass::kBush)] = sigmoid(-logit);
  l[kUnknownSlot] = kUnknownLikelihood;
  return l;
}

ClassScores classify_geometric(const SampledCloud& cloud, const ClassScores& prior) {
  const auto likelihood = geometric_likelihood(geometric_features(cloud.points));
  std::array<double, kNumSlots> post{};
  double total = 0.0;
  for (std::size_t i = 0; i < kNumSlots; ++i) {
    post[i] = likelihood[i] * prior[i];
    total += post[i];
  }
  if (!(total > 0.0)) return prior;
  return ClassScores(post);
}

}  // namespace landmarks
