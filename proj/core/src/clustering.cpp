#include "landmarks/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <tuple>
#include <unordered_map>

namespace landmarks {

namespace {

// Packs three signed 21-bit cell coordinates into one key.
std::uint64_t cell_key(std::int64_t ix, std::int64_t iy, std::int64_t iz) {
  constexpr std::int64_t kOffset = 1 << 20;
  constexpr std::uint64_t kMask = (1u << 21) - 1u;
  return ((static_cast<std::uint64_t>(ix + kOffset) & kMask) << 42) |
         ((static_cast<std::uint64_t>(iy + kOffset) & kMask) << 21) |
         (static_cast<std::uint64_t>(iz + kOffset) & kMask);
}

std::int64_t cell_index(double v, double cell) { return static_cast<std::int64_t>(std::floor(v / cell)); }

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), rank_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<unsigned char> rank_;
};

}  // namespace

GroundGrid::GroundGrid(const PointCloud& cloud, const GroundFilterParams& params) : params_(params) {
  if (!(params.cell > 0.0)) throw std::invalid_argument("ground filter cell must be > 0");
  min_z_.reserve(cloud.size() / 4 + 1);
  for (const auto& p : cloud) {
    auto [it, inserted] = min_z_.try_emplace(cell_key(index(p.x, params_.cell), index(p.y, params_.cell), 0), p.z);
    if (!inserted) it->second = std::min(it->second, p.z);
  }
}

std::int64_t GroundGrid::index(double v, double cell) { return cell_index(v, cell); }

std::vector<std::size_t> GroundGrid::non_ground_indices(const PointCloud& cloud) const {
  std::vector<std::size_t> kept;
  kept.reserve(cloud.size() / 4);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud[i];
    const auto it = min_z_.find(cell_key(index(p.x, params_.cell), index(p.y, params_.cell), 0));
    const double floor_z = it == min_z_.end() ? p.z : it->second;
    if (p.z >= floor_z + params_.z_margin) kept.push_back(i);
  }
  return kept;
}

std::optional<double> GroundGrid::ground_below(const Box3D& box) const {
  const Vec3 lo = box.min();
  const Vec3 hi = box.max();
  std::optional<double> ground;
  for (auto ix = index(lo.x(), params_.cell); ix <= index(hi.x(), params_.cell); ++ix) {
    for (auto iy = index(lo.y(), params_.cell); iy <= index(hi.y(), params_.cell); ++iy) {
      const auto it = min_z_.find(cell_key(ix, iy, 0));
      if (it != min_z_.end() && (!ground || it->second < *ground)) ground = it->second;
    }
  }
  return ground;
}

std::vector<std::size_t> non_ground_indices(const PointCloud& cloud, const GroundFilterParams& params) {
  return GroundGrid(cloud, params).non_ground_indices(cloud);
}

PointCloud remove_ground(const PointCloud& cloud, const GroundFilterParams& params) {
  PointCloud out;
  for (const auto i : non_ground_indices(cloud, params)) out.push_back(cloud[i]);
  return out;
}

std::vector<Instance3D> cluster(const PointCloud& cloud, const ClusterParams& params) {
  if (!(params.radius > 0.0)) throw std::invalid_argument("cluster radius must be > 0");
  if (params.min_points < 1) throw std::invalid_argument("min_points must be >= 1");

  const double r = params.radius;
  const double r2 = r * r;
  const std::size_t n = cloud.size();

  struct Cell {
    std::int64_t ix, iy, iz;
  };
  std::vector<Cell> cells(n);
  std::vector<std::size_t> order(n);
  std::vector<std::uint64_t> keys(n);
  for (std::size_t i = 0; i < n; ++i) {
    cells[i] = {cell_index(cloud[i].x, r), cell_index(cloud[i].y, r), cell_index(cloud[i].z, r)};
    keys[i] = cell_key(cells[i].ix, cells[i].iy, cells[i].iz);
  }
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(keys[a], a) < std::tie(keys[b], b);
  });
  // cell key -> [begin, end) range in `order`
  std::unordered_map<std::uint64_t, std::pair<std::size_t, std::size_t>> ranges;
  ranges.reserve(n / 2 + 1);
  for (std::size_t b = 0; b < n;) {
    std::size_t e = b;
    while (e < n && keys[order[e]] == keys[order[b]]) ++e;
    ranges.emplace(keys[order[b]], std::make_pair(b, e));
    b = e;
  }

  DisjointSets sets(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = cells[i];
    const auto& p = cloud[i];
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          const auto it = ranges.find(cell_key(c.ix + dx, c.iy + dy, c.iz + dz));
          if (it == ranges.end()) continue;
          for (std::size_t k = it->second.first; k < it->second.second; ++k) {
            const std::size_t j = order[k];
            if (j <= i) continue;
            const double ex = p.x - cloud[j].x;
            const double ey = p.y - cloud[j].y;
            const double ez = p.z - cloud[j].z;
            if (ex * ex + ey * ey + ez * ez <= r2) sets.unite(i, j);
          }
        }
      }
    }
  }

  std::unordered_map<std::size_t, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < n; ++i) members[sets.find(i)].push_back(i);

  std::vector<Instance3D> out;
  for (auto& [root, idx] : members) {
    if (idx.size() < params.min_points) continue;
    Instance3D inst;
    inst.source_indices = std::move(idx);
    inst.points.reserve(inst.source_indices.size());
    for (const auto i : inst.source_indices) inst.points.push_back(cloud[i]);
    inst.box = Box3D::bounding(inst.points);
    out.push_back(std::move(inst));
  }
  std::sort(out.begin(), out.end(), [](const Instance3D& a, const Instance3D& b) {
    const Vec3 la = a.box.min();
    const Vec3 lb = b.box.min();
    return std::tie(la.x(), la.y(), la.z(), a.source_indices.front()) <
           std::tie(lb.x(), lb.y(), lb.z(), b.source_indices.front());
  });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].id = static_cast<int>(i);
  return out;
}

}  // namespace landmarks
