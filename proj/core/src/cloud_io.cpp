#include "landmarks/cloud_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "landmarks/errors.hpp"

namespace landmarks {

namespace {

static_assert(sizeof(float) == 4);

float load_le_float(const char* bytes) {
  std::uint32_t bits = 0;
  for (int i = 3; i >= 0; --i) bits = (bits << 8) | static_cast<unsigned char>(bytes[i]);
  return std::bit_cast<float>(bits);
}

void store_le_float(float value, char* bytes) {
  auto bits = std::bit_cast<std::uint32_t>(value);
  for (int i = 0; i < 4; ++i) {
    bytes[i] = static_cast<char>(bits & 0xFFu);
    bits >>= 8;
  }
}

PointCloud read_bin(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (data.size() % 16 != 0) throw IoError(path.string() + ": size is not a multiple of 16 bytes");
  PointCloud cloud;
  cloud.reserve(data.size() / 16);
  for (std::size_t off = 0; off < data.size(); off += 16) {
    const char* rec = data.data() + off;
    cloud.push_back({load_le_float(rec), load_le_float(rec + 4), load_le_float(rec + 8),
                     load_le_float(rec + 12)});
  }
  return cloud;
}

bool parse_row(const std::string& line, std::array<double, 4>& out) {
  std::size_t pos = 0;
  for (int i = 0; i < 4; ++i) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    const char* first = line.data() + pos;
    const char* last = line.data() + line.size();
    const auto [ptr, ec] = std::from_chars(first, last, out[static_cast<std::size_t>(i)]);
    if (ec != std::errc{}) return false;
    pos = static_cast<std::size_t>(ptr - line.data());
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    if (i < 3) {
      if (pos >= line.size() || line[pos] != ',') return false;
      ++pos;
    }
  }
  while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r')) ++pos;
  return pos == line.size();
}

PointCloud read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  PointCloud cloud;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::array<double, 4> v{};
    if (!parse_row(line, v)) {
      if (line_no == 1) continue;  // header
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": malformed row");
    }
    cloud.push_back({v[0], v[1], v[2], v[3]});
  }
  return cloud;
}

}  // namespace

PointCloud read_cloud(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".bin") return read_bin(path);
  if (ext == ".csv") return read_csv(path);
  throw IoError("unsupported point cloud extension '" + ext + "' (expected .bin or .csv)");
}

void write_cloud(const PointCloud& cloud, const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".bin") {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    std::string buffer(cloud.size() * 16, '\0');
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      char* rec = buffer.data() + i * 16;
      store_le_float(static_cast<float>(cloud[i].x), rec);
      store_le_float(static_cast<float>(cloud[i].y), rec + 4);
      store_le_float(static_cast<float>(cloud[i].z), rec + 8);
      store_le_float(static_cast<float>(cloud[i].intensity), rec + 12);
    }
    out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    return;
  }
  if (ext == ".csv") {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "x,y,z,intensity\n";
    out.precision(9);
    for (const auto& p : cloud) out << p.x << ',' << p.y << ',' << p.z << ',' << p.intensity << '\n';
    return;
  }
  throw IoError("unsupported point cloud extension '" + ext + "' (expected .bin or .csv)");
}

}  // namespace landmarks
