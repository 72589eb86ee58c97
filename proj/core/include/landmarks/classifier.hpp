#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "landmarks/class_scores.hpp"
#include "landmarks/geometry.hpp"

namespace landmarks {

/// Exactly `n_p` points drawn from a component's accumulated cloud.
struct SampledCloud {
  PointCloud points;
  std::size_t source_count = 0;
  std::vector<std::size_t> source_indices;
};

enum class ClassifierKind { kGeometric, kExternal };

std::string_view to_string(ClassifierKind kind);
ClassifierKind classifier_kind_from_string(std::string_view s);  // "geom" | "external"

/// Uniform sampling without replacement when the cloud has at least n_p
/// points, with replacement otherwise. Deterministic in `seed`. Throws
/// std::invalid_argument on an empty cloud or n_p == 0.
SampledCloud sample_points(std::span<const Point4> points, std::size_t n_p, std::uint64_t seed);

/// Shape descriptors in cloud-relative coordinates; invariant to x-y
/// translation and rotation about z.
struct GeometricFeatures {
  double height = 0.0;              // z extent
  double footprint = 0.0;           // 2*sqrt(2) * RMS radial distance from the x-y centroid
  double aspect = 0.0;              // height / footprint
  double top_fraction = 0.0;        // share of points in the upper third of the z extent
  double mean_intensity = 0.0;
};

GeometricFeatures geometric_features(std::span<const Point4> points);

/// Per-slot likelihoods (tree, bush, unknown) from the features alone.
std::array<double, kNumSlots> geometric_likelihood(const GeometricFeatures& f);

/// Feature-rule classifier; the likelihood is multiplied by `prior` and normalized.
ClassScores classify_geometric(const SampledCloud& cloud, const ClassScores& prior);

}  // namespace landmarks
