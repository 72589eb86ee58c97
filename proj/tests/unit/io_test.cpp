#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "landmarks/calibration.hpp"
#include "landmarks/cloud_io.hpp"
#include "landmarks/errors.hpp"
#include "landmarks/proposal.hpp"

using namespace landmarks;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "landmarks_io_test";
  fs::create_directories(dir);
  return dir / name;
}

const PointCloud kCloud = {{1.0, 2.0, 3.0, 0.5}, {-4.25, 0.125, 8.0, 1.0}, {0.0, 0.0, 0.0, 0.0}};

}  // namespace

TEST(CloudIo, BinaryRoundTrip) {
  const auto path = scratch("cloud.bin");
  write_cloud(kCloud, path);
  EXPECT_EQ(fs::file_size(path), kCloud.size() * 16);
  EXPECT_EQ(read_cloud(path), kCloud);
}

TEST(CloudIo, CsvRoundTripAndHeader) {
  const auto path = scratch("cloud.csv");
  write_cloud(kCloud, path);
  EXPECT_EQ(read_cloud(path), kCloud);
  {
    std::ofstream out(path);
    out << "x,y,z,intensity\n1,2,3,0.5\n";
  }
  const auto c = read_cloud(path);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0], (Point4{1, 2, 3, 0.5}));
}

TEST(CloudIo, Errors) {
  EXPECT_THROW(read_cloud(scratch("missing.bin")), IoError);
  EXPECT_THROW(read_cloud(scratch("cloud.ply")), IoError);
  {
    std::ofstream out(scratch("short.bin"), std::ios::binary);
    out << "abc";
  }
  EXPECT_THROW(read_cloud(scratch("short.bin")), IoError);
  {
    std::ofstream out(scratch("bad.csv"));
    out << "1,2,3,0.5\n1,2,oops,0\n";
  }
  EXPECT_THROW(read_cloud(scratch("bad.csv")), IoError);
}

TEST(Calibration, JsonRoundTrip) {
  const auto c = Calibration::forward_camera(500.0, 1280, 720);
  const auto j = calibration_to_json(c);
  ASSERT_EQ(j.at("H_d_c").size(), 16u);
  ASSERT_EQ(j.at("P_c_I").size(), 12u);
  EXPECT_EQ(j.at("image_size"), nlohmann::json({1280, 720}));
  const auto back = calibration_from_json(j);
  EXPECT_TRUE(back.lidar_to_camera.matrix().isApprox(c.lidar_to_camera.matrix()));
  EXPECT_TRUE(back.projection.matrix().isApprox(c.projection.matrix()));
  EXPECT_EQ(back.image_width, 1280);

  const auto path = scratch("calibration.json");
  save_calibration(c, path);
  EXPECT_EQ(load_calibration(path).image_height, 720);
}

TEST(Calibration, ForwardCameraProjectsAheadToPrincipalPoint) {
  const auto c = Calibration::forward_camera(500.0, 1280, 720);
  const auto px = project_point({10.0, 0.0, 0.0}, c.lidar_to_camera, c.projection);
  ASSERT_TRUE(px.has_value());
  EXPECT_NEAR(px->u, 640.0, 1e-9);
  EXPECT_NEAR(px->v, 360.0, 1e-9);
  // Left of the sensor (+y) lands left in the image, above (+z) lands higher.
  const auto left_up = project_point({10.0, 1.0, 1.0}, c.lidar_to_camera, c.projection);
  ASSERT_TRUE(left_up.has_value());
  EXPECT_NEAR(left_up->u, 590.0, 1e-9);
  EXPECT_NEAR(left_up->v, 310.0, 1e-9);
}

TEST(Calibration, RejectsMalformed) {
  nlohmann::json j = calibration_to_json(Calibration::forward_camera(500.0, 1280, 720));
  j["H_d_c"] = {1, 2, 3};
  EXPECT_THROW(calibration_from_json(j), ConfigError);
  EXPECT_THROW(load_calibration(scratch("nope.json")), IoError);
}

TEST(Detections, JsonRoundTrip) {
  const std::vector<Detection2D> dets = {{{1, 2, 3, 4}, LandmarkClass::kBush, 0.75},
                                         {{10, 20, 30, 40}, LandmarkClass::kTree, 0.5}};
  const auto j = detections_to_json(dets);
  EXPECT_EQ(j[0].at("class"), 1);
  EXPECT_EQ(j[0].at("rect"), nlohmann::json({1.0, 2.0, 3.0, 4.0}));
  const auto back = detections_from_json(j);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].rect, dets[0].rect);
  EXPECT_EQ(back[1].class_id, LandmarkClass::kTree);
  EXPECT_DOUBLE_EQ(back[0].score, 0.75);
}
