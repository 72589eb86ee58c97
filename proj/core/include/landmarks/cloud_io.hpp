#pragma once

#include <filesystem>

#include "landmarks/geometry.hpp"

namespace landmarks {

// `.bin`: packed little-endian float32 (x, y, z, intensity) records.
// `.csv`: one `x,y,z,intensity` row per line; a non-numeric header line is skipped.
// Throws IoError on unreadable files, unknown extensions or malformed content.
PointCloud read_cloud(const std::filesystem::path& path);
void write_cloud(const PointCloud& cloud, const std::filesystem::path& path);

}  // namespace landmarks
