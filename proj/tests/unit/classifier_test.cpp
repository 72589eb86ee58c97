#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "landmarks/classifier.hpp"
#include "landmarks/errors.hpp"

using namespace landmarks;

namespace {

// Points on the surface of a vertical ellipsoid resting on z = 0.
PointCloud ellipsoid_cloud(double height, double diameter, std::size_t n, std::uint64_t seed, double intensity = 0.5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  PointCloud out;
  for (std::size_t i = 0; i < n; ++i) {
    Vec3 d{g(rng), g(rng), g(rng)};
    d.normalize();
    out.push_back({0.5 * diameter * d.x(), 0.5 * diameter * d.y(), 0.5 * height * (1.0 + d.z()), intensity});
  }
  return out;
}

double sum(const ClassScores& s) {
  double t = 0.0;
  for (const double v : s.values()) t += v;
  return t;
}

}  // namespace

TEST(SamplePoints, WithoutReplacementFromLargeCloud) {
  const PointCloud cloud = ellipsoid_cloud(4.0, 2.0, 12000, 1);
  const auto s = sample_points(cloud, 1024, 7);
  ASSERT_EQ(s.points.size(), 1024u);
  EXPECT_EQ(s.source_count, 12000u);
  const std::set<std::size_t> distinct(s.source_indices.begin(), s.source_indices.end());
  EXPECT_EQ(distinct.size(), 1024u);
  for (std::size_t i = 0; i < s.points.size(); ++i) EXPECT_EQ(s.points[i], cloud[s.source_indices[i]]);
}

TEST(SamplePoints, WithReplacementFromSmallCloud) {
  const PointCloud cloud = ellipsoid_cloud(1.0, 1.0, 25, 2);
  const auto s = sample_points(cloud, 512, 3);
  ASSERT_EQ(s.points.size(), 512u);
  for (const auto i : s.source_indices) EXPECT_LT(i, 25u);
}

TEST(SamplePoints, SeedDeterminism) {
  const PointCloud cloud = ellipsoid_cloud(4.0, 2.0, 2000, 4);
  EXPECT_EQ(sample_points(cloud, 512, 9).source_indices, sample_points(cloud, 512, 9).source_indices);
  EXPECT_NE(sample_points(cloud, 512, 9).source_indices, sample_points(cloud, 512, 10).source_indices);
  EXPECT_THROW(sample_points({}, 512, 1), std::invalid_argument);
  EXPECT_THROW(sample_points(cloud, 0, 1), std::invalid_argument);
}

TEST(GeometricFeatures, EllipsoidValues) {
  const auto f = geometric_features(ellipsoid_cloud(6.0, 1.0, 20000, 5, 0.6));
  EXPECT_NEAR(f.height, 6.0, 0.01);
  // RMS radius of a uniform sphere surface of radius r is r * sqrt(2/3).
  EXPECT_NEAR(f.footprint, 2.0 * std::sqrt(2.0) * 0.5 * std::sqrt(2.0 / 3.0), 0.01);
  EXPECT_NEAR(f.top_fraction, 1.0 / 3.0, 0.01);
  EXPECT_NEAR(f.mean_intensity, 0.6, 1e-9);
}

TEST(ClassifyGeometric, TallNarrowIsTree) {
  const auto s = sample_points(ellipsoid_cloud(6.0, 1.0, 3000, 6), 1024, 1);
  const auto out = classify_geometric(s, ClassScores::uniform());
  EXPECT_EQ(out.argmax(), LandmarkClass::kTree);
  EXPECT_NEAR(sum(out), 1.0, 1e-12);
}

TEST(ClassifyGeometric, LowWideIsBush) {
  const auto s = sample_points(ellipsoid_cloud(1.0, 3.0, 3000, 7), 1024, 1);
  const auto out = classify_geometric(s, ClassScores::uniform());
  EXPECT_EQ(out.argmax(), LandmarkClass::kBush);
  EXPECT_NEAR(sum(out), 1.0, 1e-12);
}

TEST(ClassifyGeometric, OneHotPriorDominates) {
  for (const auto& cloud : {ellipsoid_cloud(1.0, 3.0, 500, 8), ellipsoid_cloud(6.0, 1.0, 500, 9)}) {
    const auto s = sample_points(cloud, 512, 2);
    EXPECT_EQ(classify_geometric(s, ClassScores::one_hot(LandmarkClass::kTree)).argmax(), LandmarkClass::kTree);
    EXPECT_EQ(classify_geometric(s, ClassScores::one_hot(LandmarkClass::kBush)).argmax(), LandmarkClass::kBush);
  }
}

TEST(ClassifyGeometric, InvariantToPlanarRigidMotion) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> shape(0.5, 8.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto cloud = ellipsoid_cloud(shape(rng), shape(rng), 300, rng(), unit(rng));
    const double th = angle(rng), tx = u(rng), ty = u(rng);
    PointCloud moved;
    for (const auto& p : cloud) {
      moved.push_back({std::cos(th) * p.x - std::sin(th) * p.y + tx, std::sin(th) * p.x + std::cos(th) * p.y + ty,
                       p.z, p.intensity});
    }
    const ClassScores prior({unit(rng) + 0.01, unit(rng) + 0.01, unit(rng) + 0.01});
    const auto a = classify_geometric(sample_points(cloud, 256, 3), prior);
    const auto b = classify_geometric(sample_points(moved, 256, 3), prior);
    for (std::size_t i = 0; i < kNumSlots; ++i) EXPECT_NEAR(a[i], b[i], 1e-9);
  }
}

TEST(ClassifierKind, Parse) {
  EXPECT_EQ(classifier_kind_from_string("geom"), ClassifierKind::kGeometric);
  EXPECT_EQ(classifier_kind_from_string("external"), ClassifierKind::kExternal);
  EXPECT_EQ(to_string(ClassifierKind::kExternal), "external");
  EXPECT_THROW(classifier_kind_from_string("cnn"), ConfigError);
}
