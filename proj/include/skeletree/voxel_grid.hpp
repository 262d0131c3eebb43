// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "skeletree/errors.hpp"
#include "skeletree/point_cloud.hpp"
#include "skeletree/threading.hpp"
#include "skeletree/vec3.hpp"

namespace skeletree {

struct Extent {
  Vec3 min_corner;
  Vec3 max_corner;

  Vec3 lengths() const { return max_corner - min_corner; }
};

struct GridConfig {
  int n_divisions = 100;
  Vec3 voxel_size;  // per-axis edge length in meters; anisotropic by design
};

struct VoxelIndex {
  int i = 0;
  int j = 0;
  int k = 0;

  friend bool operator==(const VoxelIndex&, const VoxelIndex&) = default;
};

inline std::uint64_t linear_key(const VoxelIndex& v, int n) {
  const auto un = static_cast<std::uint64_t>(n);
  return (static_cast<std::uint64_t>(v.i) * un +
          static_cast<std::uint64_t>(v.j)) *
             un +
         static_cast<std::uint64_t>(v.k);
}

inline VoxelIndex from_linear_key(std::uint64_t key, int n) {
  const auto un = static_cast<std::uint64_t>(n);
  VoxelIndex v;
  v.k = static_cast<int>(key % un);
  key /= un;
  v.j = static_cast<int>(key % un);
  v.i = static_cast<int>(key / un);
  return v;
}

inline Extent compute_extent(const PointCloud& cloud) {
  if (cloud.empty()) throw EmptyCloud("compute_extent: cloud is empty");
  Vec3 lo = cloud.points[0].pos();
  Vec3 hi = lo;
  for (const auto& p : cloud.points) {
    lo = componentwise_min(lo, p.pos());
    hi = componentwise_max(hi, p.pos());
  }
  const Vec3 len = hi - lo;
  if (len.x <= 0.0 || len.y <= 0.0 || len.z <= 0.0) {
    throw DegenerateExtent(
        "compute_extent: zero-length axis; cloud is planar or collinear");
  }
  return Extent{lo, hi};
}

inline GridConfig make_grid_config(const Extent& extent, int n) {
  if (n < 2) throw InvalidN("make_grid_config: n_divisions must be >= 2");
  GridConfig cfg;
  cfg.n_divisions = n;
  // Edge lengths are the exact real quotient length/n per axis. Flooring the
  // quotient to whole meters would collapse to zero for any tree-sized
  // extent, so voxels keep fractional sizes and anisotropy.
  cfg.voxel_size = extent.lengths() / static_cast<double>(n);
  return cfg;
}

inline VoxelIndex point_to_index(const Vec3& p, const GridConfig& cfg,
                                 const Extent& extent) {
  const Vec3& lo = extent.min_corner;
  const Vec3& hi = extent.max_corner;
  if (p.x < lo.x || p.y < lo.y || p.z < lo.z || p.x > hi.x || p.y > hi.y ||
      p.z > hi.z) {
    throw OutOfExtent("point_to_index: point outside grid extent");
  }
  const int n = cfg.n_divisions;
  auto axis = [n](double value, double origin, double size) {
    int idx = static_cast<int>(std::floor((value - origin) / size));
    if (idx < 0) idx = 0;              // guards rounding at the min face
    if (idx > n - 1) idx = n - 1;      // max face belongs to the last cell
    return idx;
  };
  return VoxelIndex{axis(p.x, lo.x, cfg.voxel_size.x),
                    axis(p.y, lo.y, cfg.voxel_size.y),
                    axis(p.z, lo.z, cfg.voxel_size.z)};
}

inline Vec3 voxel_center(const VoxelIndex& v, const GridConfig& cfg,
                         const Extent& extent) {
  return {extent.min_corner.x + (v.i + 0.5) * cfg.voxel_size.x,
          extent.min_corner.y + (v.j + 0.5) * cfg.voxel_size.y,
          extent.min_corner.z + (v.k + 0.5) * cfg.voxel_size.z};
}

// Sparse occupancy over the N^3 index space. Cells are stored sorted by
// linear key with CSR-style offsets into a single array of source point
// indices, so lookup is a binary search and iteration is cache-friendly.
class VoxelGrid {
 public:
  GridConfig config;
  Extent extent;

  std::size_t occupied_count() const { return cells_.size(); }

  const std::vector<VoxelIndex>& cells() const { return cells_; }

  std::span<const std::size_t> cell_point_indices(std::size_t cell) const {
    return {point_order_.data() + offsets_[cell],
            offsets_[cell + 1] - offsets_[cell]};
  }

  std::size_t cell_count(std::size_t cell) const {
    return offsets_[cell + 1] - offsets_[cell];
  }

  // Ordinal of the cell holding idx, or npos when idx is unoccupied.
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t find_cell(const VoxelIndex& idx) const {
    const std::uint64_t key = linear_key(idx, config.n_divisions);
    const auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
    if (it == keys_.end() || *it != key) return npos;
    return static_cast<std::size_t>(it - keys_.begin());
  }

  bool is_wood_cell(std::size_t cell) const { return wood_[cell] != 0; }

  // Visits every occupied cell whose index lies in the inclusive box
  // [lo, hi]. Cells of one (i, j) row are contiguous in key order, so each
  // row costs a single binary search plus a walk.
  template <typename Fn>
  void for_each_cell_in_box(const VoxelIndex& lo, const VoxelIndex& hi,
                            Fn&& fn) const {
    const int n = config.n_divisions;
    for (int i = std::max(lo.i, 0); i <= std::min(hi.i, n - 1); ++i) {
      for (int j = std::max(lo.j, 0); j <= std::min(hi.j, n - 1); ++j) {
        const int klo = std::max(lo.k, 0);
        const int khi = std::min(hi.k, n - 1);
        if (klo > khi) continue;
        const std::uint64_t key_lo = linear_key(VoxelIndex{i, j, klo}, n);
        const std::uint64_t key_hi = linear_key(VoxelIndex{i, j, khi}, n);
        auto it = std::lower_bound(keys_.begin(), keys_.end(), key_lo);
        for (; it != keys_.end() && *it <= key_hi; ++it) {
          fn(static_cast<std::size_t>(it - keys_.begin()));
        }
      }
    }
  }

  std::vector<VoxelIndex> wood_indices() const {
    std::vector<VoxelIndex> out;
    for (std::size_t c = 0; c < cells_.size(); ++c) {
      if (wood_[c]) out.push_back(cells_[c]);
    }
    return out;
  }

  std::size_t wood_count() const {
    std::size_t n = 0;
    for (const auto w : wood_) n += w;
    return n;
  }

  friend VoxelGrid build_grid(const PointCloud& cloud, int n);
  friend void mark_wood_voxels(VoxelGrid& grid, double threshold_ratio);

 private:
  std::vector<std::uint64_t> keys_;       // sorted linear keys, one per cell
  std::vector<VoxelIndex> cells_;         // decoded keys, same order
  std::vector<std::size_t> offsets_;      // size cells+1
  std::vector<std::size_t> point_order_;  // cloud indices grouped by cell
  std::vector<std::uint8_t> wood_;        // per-cell wood flag
};

inline VoxelGrid build_grid(const PointCloud& cloud, int n) {
  VoxelGrid grid;
  grid.extent = compute_extent(cloud);
  grid.config = make_grid_config(grid.extent, n);

  const std::size_t count = cloud.size();
  std::vector<std::pair<std::uint64_t, std::size_t>> tagged(count);
  parallel_for(count, [&](std::size_t p) {
    const VoxelIndex idx =
        point_to_index(cloud.points[p].pos(), grid.config, grid.extent);
    tagged[p] = {linear_key(idx, n), p};
  });
  std::sort(tagged.begin(), tagged.end());

  grid.point_order_.resize(count);
  for (std::size_t p = 0; p < count; ++p) {
    grid.point_order_[p] = tagged[p].second;
    if (p == 0 || tagged[p].first != tagged[p - 1].first) {
      grid.keys_.push_back(tagged[p].first);
      grid.offsets_.push_back(p);
    }
  }
  grid.offsets_.push_back(count);
  grid.cells_.resize(grid.keys_.size());
  for (std::size_t c = 0; c < grid.keys_.size(); ++c) {
    grid.cells_[c] = from_linear_key(grid.keys_[c], n);
  }
  grid.wood_.assign(grid.cells_.size(), 0);
  return grid;
}

// Flags cells whose point count reaches threshold_ratio times the median
// occupied-cell count. Sparse cells are left out of skeletonization.
inline void mark_wood_voxels(VoxelGrid& grid, double threshold_ratio) {
  const std::size_t cells = grid.cells_.size();
  if (cells == 0) return;
  std::vector<std::size_t> counts(cells);
  for (std::size_t c = 0; c < cells; ++c) counts[c] = grid.cell_count(c);
  std::vector<std::size_t> sorted = counts;
  std::sort(sorted.begin(), sorted.end());
  double median;
  if (cells % 2 == 1) {
    median = static_cast<double>(sorted[cells / 2]);
  } else {
    median = 0.5 * (static_cast<double>(sorted[cells / 2 - 1]) +
                    static_cast<double>(sorted[cells / 2]));
  }
  const double cutoff = threshold_ratio * median;
  for (std::size_t c = 0; c < cells; ++c) {
    grid.wood_[c] = static_cast<double>(counts[c]) >= cutoff ? 1 : 0;
  }
}

// In-bounds indices differing by at most one step per axis, excluding v.
// Fills out[] and returns the neighbor count (26 for interior voxels).
inline int neighbors26(const VoxelIndex& v, int n, VoxelIndex out[26]) {
  int m = 0;
  for (int di = -1; di <= 1; ++di) {
    for (int dj = -1; dj <= 1; ++dj) {
      for (int dk = -1; dk <= 1; ++dk) {
        if (di == 0 && dj == 0 && dk == 0) continue;
        const int i = v.i + di;
        const int j = v.j + dj;
        const int k = v.k + dk;
        if (i < 0 || j < 0 || k < 0 || i >= n || j >= n || k >= n) continue;
        out[m++] = VoxelIndex{i, j, k};
      }
    }
  }
  return m;
}

inline std::vector<VoxelIndex> neighbors26(const VoxelIndex& v, int n) {
  VoxelIndex buf[26];
  const int m = neighbors26(v, n, buf);
  return std::vector<VoxelIndex>(buf, buf + m);
}

}  // namespace skeletree
