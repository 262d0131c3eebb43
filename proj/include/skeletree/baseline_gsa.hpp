// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <vector>

#include "skeletree/errors.hpp"
#include "skeletree/point_cloud.hpp"
#include "skeletree/skeleton_graph.hpp"
#include "skeletree/threading.hpp"
#include "skeletree/vec3.hpp"

namespace skeletree {

struct GsaParams {
  int knn = 8;                 // neighbors in the point graph
  double bin_width = 0.2;      // geodesic level width, meters
  double root_quantile = 0.005;  // lowest fraction by z forming the root set
};

namespace detail {

// Uniform hash grid used only for k-nearest-neighbor queries.
class NeighborGrid {
 public:
  NeighborGrid(const PointCloud& cloud, double cell)
      : cloud_(cloud), cell_(cell) {
    lo_ = cloud.points[0].pos();
    Vec3 hi = lo_;
    for (const auto& p : cloud.points) {
      lo_ = componentwise_min(lo_, p.pos());
      hi = componentwise_max(hi, p.pos());
    }
    const Coords top = cell_coords(hi);
    max_ring_ = static_cast<int>(std::max({top.x, top.y, top.z})) + 1;
    keys_.resize(cloud.size());
    order_.resize(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      keys_[i] = {key_of(cloud.points[i].pos()), i};
    }
    std::sort(keys_.begin(), keys_.end());
    for (std::size_t i = 0; i < cloud.size(); ++i) order_[i] = keys_[i].second;
    starts_.reserve(cloud.size() / 4);
    for (std::size_t i = 0; i < keys_.size(); ++i) {
      if (i == 0 || keys_[i].first != keys_[i - 1].first) {
        starts_.push_back({keys_[i].first, i});
      }
    }
  }

  std::size_t occupied_cells() const { return starts_.size(); }

  // Indices of the k nearest points to query point q (excluding q itself),
  // ordered by (distance, index). Expands the cell ring until the k-th
  // distance is provably final, keeping only the current best k in a
  // bounded max-heap.
  void nearest(std::size_t q, int k, std::vector<std::uint32_t>& out) const {
    const Vec3 p = cloud_.points[q].pos();
    const auto ci = cell_coords(p);
    using Entry = std::pair<double, std::uint32_t>;
    std::priority_queue<Entry> best;  // top = worst of the kept k
    for (int ring = 0; ring <= max_ring_; ++ring) {
      for_ring(ci, ring, [&](std::size_t idx) {
        if (idx == q) return;
        const Entry e{(cloud_.points[idx].pos() - p).squared_norm(),
                      static_cast<std::uint32_t>(idx)};
        if (static_cast<int>(best.size()) < k) {
          best.push(e);
        } else if (e < best.top()) {
          best.pop();
          best.push(e);
        }
      });
      if (static_cast<int>(best.size()) >= k) {
        // Points beyond this ring are at least ring*cell away.
        const double safe = static_cast<double>(ring) * cell_;
        if (best.top().first <= safe * safe) break;
      }
    }
    out.clear();
    out.resize(best.size());
    for (std::size_t i = best.size(); i-- > 0;) {
      out[i] = best.top().second;
      best.pop();
    }
  }

 private:
  struct Coords {
    std::int64_t x, y, z;
  };

  Coords cell_coords(const Vec3& p) const {
    return {static_cast<std::int64_t>(std::floor((p.x - lo_.x) / cell_)),
            static_cast<std::int64_t>(std::floor((p.y - lo_.y) / cell_)),
            static_cast<std::int64_t>(std::floor((p.z - lo_.z) / cell_))};
  }

  std::uint64_t key_of(const Vec3& p) const {
    const Coords c = cell_coords(p);
    // 21 bits per axis; extents / cell sizes here stay far below 2^21.
    return (static_cast<std::uint64_t>(c.x) << 42) |
           (static_cast<std::uint64_t>(c.y) << 21) |
           static_cast<std::uint64_t>(c.z);
  }

  template <typename Fn>
  void for_cell(const Coords& c, Fn&& fn) const {
    if (c.x < 0 || c.y < 0 || c.z < 0) return;
    const std::uint64_t key = (static_cast<std::uint64_t>(c.x) << 42) |
                              (static_cast<std::uint64_t>(c.y) << 21) |
                              static_cast<std::uint64_t>(c.z);
    const auto it = std::lower_bound(
        starts_.begin(), starts_.end(), key,
        [](const auto& s, std::uint64_t k) { return s.first < k; });
    if (it == starts_.end() || it->first != key) return;
    const std::size_t begin = it->second;
    const std::size_t end =
        (it + 1 == starts_.end()) ? keys_.size() : (it + 1)->second;
    for (std::size_t i = begin; i < end; ++i) fn(order_[i]);
  }

  // Visits the cells whose Chebyshev distance from center equals ring.
  template <typename Fn>
  void for_ring(const Coords& center, int ring, Fn&& fn) const {
    if (ring == 0) {
      for_cell(center, fn);
      return;
    }
    for (std::int64_t dx = -ring; dx <= ring; ++dx) {
      for (std::int64_t dy = -ring; dy <= ring; ++dy) {
        for (std::int64_t dz = -ring; dz <= ring; ++dz) {
          const std::int64_t cheb =
              std::max({std::abs(dx), std::abs(dy), std::abs(dz)});
          if (cheb != ring) continue;
          for_cell({center.x + dx, center.y + dy, center.z + dz}, fn);
        }
      }
    }
  }

  const PointCloud& cloud_;
  double cell_;
  Vec3 lo_;
  int max_ring_ = 0;
  std::vector<std::pair<std::uint64_t, std::size_t>> keys_;
  std::vector<std::size_t> order_;
  std::vector<std::pair<std::uint64_t, std::size_t>> starts_;
};

}  // namespace detail

// Graph-search baseline: k-nearest-neighbor graph, multi-source shortest
// paths from the lowest points, geodesic binning, per-level clustering, and
// level-to-level linking. Points unreachable from the root set produce no
// nodes.
inline SkeletonGraph extract_gsa(const PointCloud& cloud,
                                 const GsaParams& params) {
  if (cloud.empty()) throw EmptyCloud("extract_gsa: empty cloud");
  if (params.knn < 2) throw InvalidArgument("extract_gsa: knn must be >= 2");
  if (!(params.bin_width > 0)) {
    throw InvalidArgument("extract_gsa: bin_width must be > 0");
  }
  const std::size_t n = cloud.size();

  // Cell size aimed at a handful of points per cell.
  Vec3 lo = cloud.points[0].pos();
  Vec3 hi = lo;
  for (const auto& p : cloud.points) {
    lo = componentwise_min(lo, p.pos());
    hi = componentwise_max(hi, p.pos());
  }
  const Vec3 span = hi - lo;
  const double volume =
      std::max(span.x, 1e-9) * std::max(span.y, 1e-9) * std::max(span.z, 1e-9);
  // Scan clouds sample surfaces, so the volumetric estimate below can land
  // orders of magnitude too coarse. Build, inspect the mean occupancy of the
  // cells actually hit, and shrink until queries touch only a handful of
  // points. The floor keeps cell coordinates inside the 21-bit key packing.
  const double span_max = std::max({span.x, span.y, span.z, 1e-9});
  const double min_cell = span_max / static_cast<double>(1 << 20);
  double cell = std::max(min_cell,
                         2.0 * std::cbrt(volume / static_cast<double>(n)));
  std::optional<detail::NeighborGrid> grid(std::in_place, cloud, cell);
  const double target_occupancy = std::max(2.0, params.knn / 4.0);
  for (int attempt = 0; attempt < 4; ++attempt) {
    const double occupancy = static_cast<double>(n) /
                             static_cast<double>(grid->occupied_cells());
    if (occupancy <= 8.0 * target_occupancy || cell <= min_cell * 2.0) break;
    cell = std::max(min_cell, cell * std::sqrt(target_occupancy / occupancy));
    grid.emplace(cloud, cell);
  }

  // Directed kNN lists, then a symmetrized CSR adjacency.
  std::vector<std::uint32_t> knn_flat(n * params.knn,
                                      std::numeric_limits<std::uint32_t>::max());
  parallel_for(n, [&](std::size_t i) {
    std::vector<std::uint32_t> nb;
    grid->nearest(i, params.knn, nb);
    for (std::size_t j = 0; j < nb.size(); ++j) {
      knn_flat[i * params.knn + j] = nb[j];
    }
  });

  std::vector<std::uint32_t> degree(n, 0);
  const std::uint32_t none = std::numeric_limits<std::uint32_t>::max();
  for (std::size_t i = 0; i < n; ++i) {
    for (int j = 0; j < params.knn; ++j) {
      const std::uint32_t v = knn_flat[i * params.knn + j];
      if (v == none) continue;
      ++degree[i];
      ++degree[v];
    }
  }
  std::vector<std::size_t> offset(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) offset[i + 1] = offset[i] + degree[i];
  std::vector<std::uint32_t> adjacency(offset[n]);
  std::vector<std::size_t> cursor(offset.begin(), offset.end() - 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (int j = 0; j < params.knn; ++j) {
      const std::uint32_t v = knn_flat[i * params.knn + j];
      if (v == none) continue;
      adjacency[cursor[i]++] = v;
      adjacency[cursor[v]++] = static_cast<std::uint32_t>(i);
    }
  }

  // Root set: lowest root_quantile fraction by z (at least one point).
  std::vector<std::uint32_t> by_z(n);
  for (std::size_t i = 0; i < n; ++i) by_z[i] = static_cast<std::uint32_t>(i);
  std::sort(by_z.begin(), by_z.end(), [&](std::uint32_t a, std::uint32_t b) {
    const double za = cloud.points[a].z;
    const double zb = cloud.points[b].z;
    if (za != zb) return za < zb;
    return a < b;
  });
  const std::size_t root_count = std::max<std::size_t>(
      1, static_cast<std::size_t>(static_cast<double>(n) *
                                  params.root_quantile));
  if (root_count == 0) throw NoRoot("extract_gsa: empty root set");

  // Multi-source Dijkstra over the kNN graph with Euclidean edge weights.
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n, kInf);
  using HeapItem = std::pair<double, std::uint32_t>;
  std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<>> heap;
  for (std::size_t r = 0; r < root_count; ++r) {
    dist[by_z[r]] = 0.0;
    heap.push({0.0, by_z[r]});
  }
  while (!heap.empty()) {
    const auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[u]) continue;
    const Vec3 pu = cloud.points[u].pos();
    for (std::size_t e = offset[u]; e < offset[u + 1]; ++e) {
      const std::uint32_t v = adjacency[e];
      const double w = (cloud.points[v].pos() - pu).norm();
      if (dist[u] + w < dist[v]) {
        dist[v] = dist[u] + w;
        heap.push({dist[v], v});
      }
    }
  }

  // Geodesic levels; unreachable points are dropped.
  std::vector<std::int32_t> level(n, -1);
  std::int32_t max_level = -1;
  for (std::size_t i = 0; i < n; ++i) {
    if (dist[i] == kInf) continue;
    level[i] = static_cast<std::int32_t>(dist[i] / params.bin_width);
    max_level = std::max(max_level, level[i]);
  }
  if (max_level < 0) throw NoRoot("extract_gsa: no reachable points");

  // Within each level, clusters are connected components of the kNN
  // subgraph. Union-find with the smallest point index as representative.
  std::vector<std::uint32_t> parent(n);
  for (std::size_t i = 0; i < n; ++i) parent[i] = static_cast<std::uint32_t>(i);
  std::vector<std::uint32_t> find_stack;
  auto find = [&](std::uint32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (std::size_t u = 0; u < n; ++u) {
    if (level[u] < 0) continue;
    for (std::size_t e = offset[u]; e < offset[u + 1]; ++e) {
      const std::uint32_t v = adjacency[e];
      if (level[v] != level[u]) continue;
      const std::uint32_t ru = find(static_cast<std::uint32_t>(u));
      const std::uint32_t rv = find(v);
      if (ru == rv) continue;
      if (ru < rv) {
        parent[rv] = ru;
      } else {
        parent[ru] = rv;
      }
    }
  }

  // One node per cluster; clusters ordered by (level, representative).
  std::vector<std::uint32_t> rep(n, none);
  std::vector<std::uint32_t> cluster_of(n, none);
  struct Cluster {
    std::int32_t level;
    std::uint32_t rep;
  };
  std::vector<Cluster> clusters;
  for (std::size_t i = 0; i < n; ++i) {
    if (level[i] < 0) continue;
    rep[i] = find(static_cast<std::uint32_t>(i));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (level[i] < 0) continue;
    if (rep[i] == static_cast<std::uint32_t>(i)) {
      clusters.push_back({level[i], rep[i]});
    }
  }
  std::sort(clusters.begin(), clusters.end(),
            [](const Cluster& a, const Cluster& b) {
              if (a.level != b.level) return a.level < b.level;
              return a.rep < b.rep;
            });
  std::vector<std::uint32_t> cluster_id_of_rep(n, none);
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    cluster_id_of_rep[clusters[c].rep] = static_cast<std::uint32_t>(c);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (level[i] < 0) continue;
    cluster_of[i] = cluster_id_of_rep[rep[i]];
  }

  SkeletonGraph graph;
  graph.nodes.resize(clusters.size());
  std::vector<std::size_t> cluster_size(clusters.size(), 0);
  std::vector<Vec3> cluster_sum(clusters.size(), Vec3{0, 0, 0});
  for (std::size_t i = 0; i < n; ++i) {
    if (cluster_of[i] == none) continue;
    cluster_sum[cluster_of[i]] += cloud.points[i].pos();
    ++cluster_size[cluster_of[i]];
  }
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    SkeletonNode node;
    node.position = cluster_sum[c] / static_cast<double>(cluster_size[c]);
    node.voxel = {0, 0, 0};
    node.source_point_count = cluster_size[c];
    graph.nodes[c] = node;
  }

  // Link each cluster to the nearest previous-level cluster among those
  // reachable through a kNN edge crossing the bin boundary.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> crossing;
  for (std::size_t u = 0; u < n; ++u) {
    if (cluster_of[u] == none) continue;
    for (std::size_t e = offset[u]; e < offset[u + 1]; ++e) {
      const std::uint32_t v = adjacency[e];
      if (cluster_of[v] == none) continue;
      if (level[v] + 1 != level[u]) continue;  // v is one level below u
      crossing.push_back({cluster_of[u], cluster_of[v]});
    }
  }
  std::sort(crossing.begin(), crossing.end());
  crossing.erase(std::unique(crossing.begin(), crossing.end()),
                 crossing.end());
  std::size_t c = 0;
  while (c < crossing.size()) {
    const std::uint32_t upper = crossing[c].first;
    std::uint32_t best = none;
    double best_dist = kInf;
    while (c < crossing.size() && crossing[c].first == upper) {
      const std::uint32_t lower = crossing[c].second;
      const double d = (graph.nodes[upper].position -
                        graph.nodes[lower].position)
                           .squared_norm();
      if (d < best_dist || (d == best_dist && lower < best)) {
        best_dist = d;
        best = lower;
      }
      ++c;
    }
    graph.add_edge(upper, best);
  }

  relabel_components(graph);
  return graph;
}

}  // namespace skeletree
