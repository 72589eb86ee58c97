#include "landmarks/calibration.hpp"

#include <fstream>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "landmarks/errors.hpp"

namespace landmarks {

Calibration Calibration::forward_camera(double focal_px, int width, int height) {
  Eigen::Matrix4d h = Eigen::Matrix4d::Identity();
  h.topLeftCorner<3, 3>() << 0.0, -1.0, 0.0,
                             0.0, 0.0, -1.0,
                             1.0, 0.0, 0.0;
  Calibration c;
  c.lidar_to_camera = Extrinsic(h);
  c.projection = CameraProjection::pinhole(focal_px, focal_px, 0.5 * width, 0.5 * height);
  c.image_width = width;
  c.image_height = height;
  return c;
}

Calibration calibration_from_json(const nlohmann::json& j) {
  try {
    Calibration c;
    const auto h = j.at("H_d_c").get<std::vector<double>>();
    const auto p = j.at("P_c_I").get<std::vector<double>>();
    c.lidar_to_camera = Extrinsic::from_row_major(h);
    c.projection = CameraProjection::from_row_major(p);
    const auto size = j.at("image_size").get<std::vector<int>>();
    if (size.size() != 2 || size[0] <= 0 || size[1] <= 0) {
      throw std::invalid_argument("image_size must be [width, height] > 0");
    }
    c.image_width = size[0];
    c.image_height = size[1];
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("calibration: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("calibration: ") + e.what());
  }
}

nlohmann::json calibration_to_json(const Calibration& c) {
  return {{"H_d_c", c.lidar_to_camera.row_major()},
          {"P_c_I", c.projection.row_major()},
          {"image_size", {c.image_width, c.image_height}}};
}

Calibration load_calibration(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open calibration file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("calibration " + path.string() + ": " + e.what());
  }
  return calibration_from_json(j);
}

void save_calibration(const Calibration& c, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write calibration file " + path.string());
  out << calibration_to_json(c).dump(2) << '\n';
}

}  // namespace landmarks
