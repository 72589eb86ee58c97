#pragma once

#include <filesystem>

#include <nlohmann/json_fwd.hpp>

#include "landmarks/geometry.hpp"

namespace landmarks {

/// LiDAR-to-camera extrinsic, camera projection and image size.
struct Calibration {
  Extrinsic lidar_to_camera;
  CameraProjection projection;
  int image_width = 1280;
  int image_height = 720;

  /// Forward-looking pinhole camera co-located with the LiDAR
  /// (camera x = -lidar y, camera y = -lidar z, camera z = lidar x).
  static Calibration forward_camera(double focal_px, int width, int height);
};

// {"H_d_c": [16 row-major], "P_c_I": [12 row-major], "image_size": [w, h]}
Calibration calibration_from_json(const nlohmann::json& j);
nlohmann::json calibration_to_json(const Calibration& c);
Calibration load_calibration(const std::filesystem::path& path);
void save_calibration(const Calibration& c, const std::filesystem::path& path);

}  // namespace landmarks
