// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstdint>
#include <vector>

#include "skeletree/errors.hpp"
#include "skeletree/threading.hpp"
#include "skeletree/voxel_grid.hpp"

namespace skeletree {

// Dense bit grid over the n^3 voxel index space. Reads outside the bounds
// return background, which is the boundary convention the topology tests
// rely on.
class BinaryGrid {
 public:
  explicit BinaryGrid(int n) : n_(n) {
    if (n < 1) throw InvalidArgument("BinaryGrid: n must be >= 1");
    const std::uint64_t cells = static_cast<std::uint64_t>(n) * n * n;
    words_.assign((cells + 63) / 64, 0);
  }

  int n() const { return n_; }

  bool in_bounds(int i, int j, int k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < n_ && j < n_ && k < n_;
  }

  bool get(int i, int j, int k) const {
    if (!in_bounds(i, j, k)) return false;
    const std::uint64_t bit = linear(i, j, k);
    return (words_[bit >> 6] >> (bit & 63)) & 1u;
  }

  bool get(const VoxelIndex& v) const { return get(v.i, v.j, v.k); }

  void set(int i, int j, int k, bool value) {
    const std::uint64_t bit = linear(i, j, k);
    const std::uint64_t mask = std::uint64_t{1} << (bit & 63);
    if (value) {
      if (!(words_[bit >> 6] & mask)) {
        words_[bit >> 6] |= mask;
        ++count_;
      }
    } else {
      if (words_[bit >> 6] & mask) {
        words_[bit >> 6] &= ~mask;
        --count_;
      }
    }
  }

  void set(const VoxelIndex& v, bool value) { set(v.i, v.j, v.k, value); }

  std::size_t foreground_count() const { return count_; }

  // Foreground indices in ascending linear order (i-major, then j, then k).
  std::vector<VoxelIndex> foreground() const {
    std::vector<VoxelIndex> out;
    out.reserve(count_);
    for (std::size_t w = 0; w < words_.size(); ++w) {
      std::uint64_t bits = words_[w];
      while (bits != 0) {
        const int b = std::countr_zero(bits);
        bits &= bits - 1;
        out.push_back(
            from_linear_key(static_cast<std::uint64_t>(w) * 64 + b, n_));
      }
    }
    return out;
  }

  std::uint64_t linear(int i, int j, int k) const {
    return (static_cast<std::uint64_t>(i) * n_ + j) * n_ + k;
  }

  friend bool operator==(const BinaryGrid& a, const BinaryGrid& b) {
    return a.n_ == b.n_ && a.words_ == b.words_;
  }

 private:
  int n_;
  std::vector<std::uint64_t> words_;
  std::size_t count_ = 0;
};

inline BinaryGrid wood_binary(const VoxelGrid& grid) {
  BinaryGrid out(grid.config.n_divisions);
  for (const auto& v : grid.wood_indices()) out.set(v, true);
  return out;
}

namespace detail {

// Local 3x3x3 neighborhood: cell (dx,dy,dz) with offsets in {-1,0,1} maps to
// index (dx+1)*9 + (dy+1)*3 + (dz+1); the center is 13. Adjacency inside the
// cube is precomputed once at compile time.
constexpr int kLocalCenter = 13;

struct LocalTables {
  int adj26[27][26]{};
  int adj26_count[27]{};
  int adj6[27][6]{};
  int adj6_count[27]{};
  bool in_n18[27]{};
  int face_cells[6]{};
};

constexpr LocalTables make_local_tables() {
  LocalTables t{};
  int coord[27][3]{};
  for (int d = 0; d < 27; ++d) {
    coord[d][0] = d / 9 - 1;
    coord[d][1] = (d / 3) % 3 - 1;
    coord[d][2] = d % 3 - 1;
  }
  auto abs_i = [](int x) { return x < 0 ? -x : x; };
  int face_n = 0;
  for (int d = 0; d < 27; ++d) {
    const int manhattan =
        abs_i(coord[d][0]) + abs_i(coord[d][1]) + abs_i(coord[d][2]);
    t.in_n18[d] = manhattan == 1 || manhattan == 2;
    if (manhattan == 1) t.face_cells[face_n++] = d;
    if (d == kLocalCenter) continue;
    for (int e = 0; e < 27; ++e) {
      if (e == d || e == kLocalCenter) continue;
      const int di = abs_i(coord[d][0] - coord[e][0]);
      const int dj = abs_i(coord[d][1] - coord[e][1]);
      const int dk = abs_i(coord[d][2] - coord[e][2]);
      const bool adjacent26 = di <= 1 && dj <= 1 && dk <= 1;
      if (adjacent26) t.adj26[d][t.adj26_count[d]++] = e;
      if (di + dj + dk == 1) t.adj6[d][t.adj6_count[d]++] = e;
    }
  }
  return t;
}

inline constexpr LocalTables kLocal = make_local_tables();

inline void load_neighborhood(const BinaryGrid& g, const VoxelIndex& v,
                              bool fg[27]) {
  for (int d = 0; d < 27; ++d) {
    if (d == kLocalCenter) {
      fg[d] = false;  // the candidate itself is treated as already deleted
      continue;
    }
    fg[d] = g.get(v.i + d / 9 - 1, v.j + (d / 3) % 3 - 1, v.k + d % 3 - 1);
  }
}

}  // namespace detail

// Simple-point test for (26,6) connectivity: deleting v must leave exactly
// one 26-connected foreground component among its 26 neighbors and exactly
// one 6-connected background component, within the 18-neighborhood, that
// touches a face of v. Either condition failing means deletion would change
// the topology.
inline bool is_simple(const BinaryGrid& g, const VoxelIndex& v) {
  if (!g.get(v)) throw NotForeground("is_simple: voxel is background");
  using detail::kLocal;
  bool fg[27];
  detail::load_neighborhood(g, v, fg);

  bool seen[27] = {};
  int stack[27];
  int fg_components = 0;
  for (int d = 0; d < 27; ++d) {
    if (d == detail::kLocalCenter || !fg[d] || seen[d]) continue;
    if (++fg_components > 1) return false;
    int top = 0;
    stack[top++] = d;
    seen[d] = true;
    while (top > 0) {
      const int cur = stack[--top];
      for (int a = 0; a < kLocal.adj26_count[cur]; ++a) {
        const int nb = kLocal.adj26[cur][a];
        if (fg[nb] && !seen[nb]) {
          seen[nb] = true;
          stack[top++] = nb;
        }
      }
    }
  }
  if (fg_components != 1) return false;

  bool bseen[27] = {};
  int bg_components = 0;
  for (const int f : kLocal.face_cells) {
    if (fg[f] || bseen[f]) continue;
    if (++bg_components > 1) return false;
    int top = 0;
    stack[top++] = f;
    bseen[f] = true;
    while (top > 0) {
      const int cur = stack[--top];
      for (int a = 0; a < kLocal.adj6_count[cur]; ++a) {
        const int nb = kLocal.adj6[cur][a];
        if (kLocal.in_n18[nb] && !fg[nb] && !bseen[nb]) {
          bseen[nb] = true;
          stack[top++] = nb;
        }
      }
    }
  }
  return bg_components == 1;
}

inline bool is_endpoint(const BinaryGrid& g, const VoxelIndex& v) {
  if (!g.get(v)) throw NotForeground("is_endpoint: voxel is background");
  int neighbors = 0;
  for (int di = -1; di <= 1; ++di) {
    for (int dj = -1; dj <= 1; ++dj) {
      for (int dk = -1; dk <= 1; ++dk) {
        if (di == 0 && dj == 0 && dk == 0) continue;
        if (g.get(v.i + di, v.j + dj, v.k + dk)) {
          if (++neighbors > 1) return false;
        }
      }
    }
  }
  return true;
}

// Directional sequential-recheck curve thinning. Per pass, the six scan
// directions run in the fixed order up, down, north, south, east, west
// (+z, -z, +y, -y, +x, -x). Each subiteration collects the foreground voxels
// whose face neighbor in that direction is background and which are simple
// non-endpoints, then deletes them one at a time in ascending linear order,
// re-testing simplicity and endpointness against the partially deleted grid
// so that no deletion can break connectivity. max_passes == 0 means run to
// the fixpoint.
inline BinaryGrid thin(BinaryGrid grid, int max_passes = 0) {
  static constexpr int kDirections[6][3] = {{0, 0, 1},  {0, 0, -1},
                                            {0, 1, 0},  {0, -1, 0},
                                            {1, 0, 0},  {-1, 0, 0}};
  int passes = 0;
  bool changed = true;
  while (changed && (max_passes == 0 || passes < max_passes)) {
    changed = false;
    for (const auto& dir : kDirections) {
      const std::vector<VoxelIndex> fg = grid.foreground();
      std::vector<std::uint8_t> candidate(fg.size(), 0);
      parallel_for(fg.size(), [&](std::size_t idx) {
        const VoxelIndex& v = fg[idx];
        if (grid.get(v.i + dir[0], v.j + dir[1], v.k + dir[2])) return;
        if (is_endpoint(grid, v)) return;
        if (!is_simple(grid, v)) return;
        candidate[idx] = 1;
      });
      for (std::size_t idx = 0; idx < fg.size(); ++idx) {
        if (!candidate[idx]) continue;
        const VoxelIndex& v = fg[idx];
        // Border status is monotone under deletion; simplicity and
        // endpointness are not, so both are re-verified here.
        if (is_endpoint(grid, v) || !is_simple(grid, v)) continue;
        grid.set(v, false);
        changed = true;
      }
    }
    ++passes;
  }
  return grid;
}

}  // namespace skeletree
