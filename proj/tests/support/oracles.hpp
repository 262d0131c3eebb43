// SPDX-License-Identifier: Apache-2.0
// Independent reference implementations used to cross-check the library.
// Everything here is deliberately brute-force: correctness over speed.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "skeletree/point_cloud.hpp"
#include "skeletree/rng.hpp"
#include "skeletree/skeleton_graph.hpp"
#include "skeletree/thinning.hpp"
#include "skeletree/vec3.hpp"

namespace testsupport {

// Number of 26-connected foreground components, by flood fill.
inline int count_fg_components_26(const skeletree::BinaryGrid& grid) {
  const int n = grid.n();
  std::vector<char> visited(static_cast<std::size_t>(n) * n * n, 0);
  auto lin = [n](int i, int j, int k) {
    return (static_cast<std::size_t>(i) * n + j) * n + k;
  };
  int components = 0;
  std::vector<std::array<int, 3>> stack;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        if (!grid.get(i, j, k) || visited[lin(i, j, k)]) continue;
        ++components;
        stack.push_back({i, j, k});
        visited[lin(i, j, k)] = 1;
        while (!stack.empty()) {
          const auto [ci, cj, ck] = stack.back();
          stack.pop_back();
          for (int di = -1; di <= 1; ++di) {
            for (int dj = -1; dj <= 1; ++dj) {
              for (int dk = -1; dk <= 1; ++dk) {
                if (di == 0 && dj == 0 && dk == 0) continue;
                const int x = ci + di, y = cj + dj, z = ck + dk;
                if (x < 0 || y < 0 || z < 0 || x >= n || y >= n || z >= n) {
                  continue;
                }
                if (!grid.get(x, y, z) || visited[lin(x, y, z)]) continue;
                visited[lin(x, y, z)] = 1;
                stack.push_back({x, y, z});
              }
            }
          }
        }
      }
    }
  }
  return components;
}

// Number of 6-connected background components, counting the unbounded
// exterior as one region: every background cell on the grid boundary belongs
// to it.
inline int count_bg_components_6(const skeletree::BinaryGrid& grid) {
  const int n = grid.n();
  std::vector<char> visited(static_cast<std::size_t>(n) * n * n, 0);
  auto lin = [n](int i, int j, int k) {
    return (static_cast<std::size_t>(i) * n + j) * n + k;
  };
  constexpr int kFaces[6][3] = {{1, 0, 0},  {-1, 0, 0}, {0, 1, 0},
                                {0, -1, 0}, {0, 0, 1},  {0, 0, -1}};
  std::vector<std::array<int, 3>> stack;
  auto flood = [&](std::vector<std::array<int, 3>> seeds) {
    for (const auto& s : seeds) {
      if (visited[lin(s[0], s[1], s[2])]) continue;
      visited[lin(s[0], s[1], s[2])] = 1;
      stack.push_back(s);
    }
    while (!stack.empty()) {
      const auto [ci, cj, ck] = stack.back();
      stack.pop_back();
      for (const auto& f : kFaces) {
        const int x = ci + f[0], y = cj + f[1], z = ck + f[2];
        if (x < 0 || y < 0 || z < 0 || x >= n || y >= n || z >= n) continue;
        if (grid.get(x, y, z) || visited[lin(x, y, z)]) continue;
        visited[lin(x, y, z)] = 1;
        stack.push_back({x, y, z});
      }
    }
  };

  // The exterior component: seeded from every boundary background cell. It
  // exists even when the boundary is fully foreground.
  std::vector<std::array<int, 3>> boundary;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        const bool on_boundary = i == 0 || j == 0 || k == 0 || i == n - 1 ||
                                 j == n - 1 || k == n - 1;
        if (on_boundary && !grid.get(i, j, k)) boundary.push_back({i, j, k});
      }
    }
  }
  int components = 1;
  flood(std::move(boundary));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        if (grid.get(i, j, k) || visited[lin(i, j, k)]) continue;
        ++components;
        flood({{i, j, k}});
      }
    }
  }
  return components;
}

// Edge set implied by pairwise 26-adjacency of foreground voxels, with nodes
// numbered by ascending linear index (the library's node order).
inline std::vector<std::pair<std::size_t, std::size_t>> adjacency_edges_oracle(
    const skeletree::BinaryGrid& grid) {
  const auto fg = grid.foreground();
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t a = 0; a < fg.size(); ++a) {
    for (std::size_t b = a + 1; b < fg.size(); ++b) {
      const int di = std::abs(fg[a].i - fg[b].i);
      const int dj = std::abs(fg[a].j - fg[b].j);
      const int dk = std::abs(fg[a].k - fg[b].k);
      if (di <= 1 && dj <= 1 && dk <= 1) edges.push_back({a, b});
    }
  }
  return edges;
}

inline skeletree::BinaryGrid random_binary_grid(skeletree::Rng& rng, int n,
                                                double fill) {
  skeletree::BinaryGrid grid(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        if (rng.uniform() < fill) grid.set(i, j, k, true);
      }
    }
  }
  return grid;
}

// k nearest neighbors of point i by full scan, ordered by (distance, index).
inline std::vector<std::uint32_t> brute_knn(const skeletree::PointCloud& cloud,
                                            std::size_t i, int k) {
  std::vector<std::pair<double, std::uint32_t>> all;
  const skeletree::Vec3 p = cloud.points[i].pos();
  for (std::size_t j = 0; j < cloud.size(); ++j) {
    if (j == i) continue;
    all.push_back({(cloud.points[j].pos() - p).squared_norm(),
                   static_cast<std::uint32_t>(j)});
  }
  std::sort(all.begin(), all.end());
  std::vector<std::uint32_t> out;
  for (int j = 0; j < k && j < static_cast<int>(all.size()); ++j) {
    out.push_back(all[j].second);
  }
  return out;
}

// Open chain along the given positions: edges (i, i+1), single branch label.
inline skeletree::SkeletonGraph make_chain(
    const std::vector<skeletree::Vec3>& positions) {
  skeletree::SkeletonGraph graph;
  for (const auto& p : positions) {
    skeletree::SkeletonNode node;
    node.position = p;
    node.voxel = {0, 0, 0};
    node.source_point_count = 1;
    graph.nodes.push_back(node);
  }
  for (std::size_t i = 0; i + 1 < positions.size(); ++i) {
    graph.add_edge(i, i + 1);
  }
  graph.branch_labels.assign(graph.nodes.size(), 0);
  return graph;
}

// Σ |p_{i-1} - 2 p_i + p_{i+1}|² over the interior of an open chain.
inline double chain_bending_energy(const skeletree::SkeletonGraph& graph) {
  double energy = 0.0;
  for (std::size_t i = 1; i + 1 < graph.nodes.size(); ++i) {
    const skeletree::Vec3 d = graph.nodes[i - 1].position -
                              2.0 * graph.nodes[i].position +
                              graph.nodes[i + 1].position;
    energy += d.squared_norm();
  }
  return energy;
}

// RAII temporary directory for file round-trip tests.
class TempDir {
 public:
  TempDir() {
    const auto base = std::filesystem::temp_directory_path();
    std::mt19937_64 rng(std::random_device{}());
    for (;;) {
      path_ = base / ("skeletree-test-" + std::to_string(rng()));
      if (std::filesystem::create_directory(path_)) break;
    }
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testsupport
