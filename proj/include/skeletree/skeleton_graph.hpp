// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "skeletree/errors.hpp"
#include "skeletree/point_cloud.hpp"
#include "skeletree/thinning.hpp"
#include "skeletree/vec3.hpp"
#include "skeletree/voxel_grid.hpp"

namespace skeletree {

struct SkeletonNode {
  Vec3 position;               // barycenter of the voxel's source points
  VoxelIndex voxel;
  std::size_t source_point_count = 0;
};

// Undirected graph over skeleton nodes. Edges are canonical (small index
// first), kept sorted and unique. branch_labels holds the connected-component
// id of every node, compact from zero.
struct SkeletonGraph {
  std::vector<SkeletonNode> nodes;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  std::vector<int> branch_labels;

  bool has_edge(std::uint32_t u, std::uint32_t v) const {
    if (u == v) return false;
    if (u > v) std::swap(u, v);
    return std::binary_search(edges.begin(), edges.end(), std::pair{u, v});
  }

  // Inserts keeping the canonical sorted order; self-loops and duplicates
  // are rejected silently.
  void add_edge(std::uint32_t u, std::uint32_t v) {
    if (u == v) return;
    if (u > v) std::swap(u, v);
    const std::pair<std::uint32_t, std::uint32_t> e{u, v};
    const auto it = std::lower_bound(edges.begin(), edges.end(), e);
    if (it != edges.end() && *it == e) return;
    edges.insert(it, e);
  }

  std::size_t branch_count() const {
    int top = -1;
    for (const int label : branch_labels) top = std::max(top, label);
    return static_cast<std::size_t>(top + 1);
  }
};

struct Branch {
  int id = 0;
  std::vector<std::uint32_t> node_indices;
  std::uint32_t min_z_node = 0;
  std::size_t node_count = 0;
};

inline std::vector<std::vector<std::uint32_t>> adjacency_lists(
    const SkeletonGraph& graph) {
  std::vector<std::vector<std::uint32_t>> adj(graph.nodes.size());
  for (const auto& [u, v] : graph.edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  for (auto& list : adj) std::sort(list.begin(), list.end());
  return adj;
}

inline std::vector<int> node_degrees(const SkeletonGraph& graph) {
  std::vector<int> deg(graph.nodes.size(), 0);
  for (const auto& [u, v] : graph.edges) {
    ++deg[u];
    ++deg[v];
  }
  return deg;
}

// Recomputes branch_labels as connected components. Components are numbered
// in order of their lowest node index, so labeling is deterministic.
inline void relabel_components(SkeletonGraph& graph) {
  const auto adj = adjacency_lists(graph);
  graph.branch_labels.assign(graph.nodes.size(), -1);
  int next = 0;
  std::vector<std::uint32_t> stack;
  for (std::uint32_t start = 0; start < graph.nodes.size(); ++start) {
    if (graph.branch_labels[start] != -1) continue;
    const int label = next++;
    graph.branch_labels[start] = label;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::uint32_t cur = stack.back();
      stack.pop_back();
      for (const std::uint32_t nb : adj[cur]) {
        if (graph.branch_labels[nb] == -1) {
          graph.branch_labels[nb] = label;
          stack.push_back(nb);
        }
      }
    }
  }
}

inline Vec3 barycenter(std::span<const Vec3> points) {
  if (points.empty()) throw EmptyInput("barycenter: no points");
  Vec3 sum{0, 0, 0};
  for (const auto& p : points) sum += p;
  return sum / static_cast<double>(points.size());
}

// One node per thinned voxel at the barycenter of that voxel's source
// points; edges between every 26-adjacent pair of thinned voxels, found by
// depth-first traversal from the lowest-index voxel with neighbors visited
// in lexicographic order.
inline SkeletonGraph build_raw_skeleton(const BinaryGrid& thinned,
                                        const VoxelGrid& grid,
                                        const PointCloud& cloud) {
  const std::vector<VoxelIndex> voxels = thinned.foreground();
  if (voxels.empty()) throw EmptyGrid("build_raw_skeleton: no thinned voxels");

  SkeletonGraph graph;
  graph.nodes.resize(voxels.size());
  parallel_for(voxels.size(), [&](std::size_t vi) {
    const VoxelIndex v = voxels[vi];
    const std::size_t cell = grid.find_cell(v);
    if (cell == VoxelGrid::npos) {
      throw InvalidArgument(
          "build_raw_skeleton: thinned voxel has no source points");
    }
    const auto indices = grid.cell_point_indices(cell);
    Vec3 sum{0, 0, 0};
    for (const std::size_t p : indices) sum += cloud.points[p].pos();
    SkeletonNode node;
    node.position = sum / static_cast<double>(indices.size());
    node.voxel = v;
    node.source_point_count = indices.size();
    graph.nodes[vi] = node;
  });

  // Node ordinal from voxel index: voxels are in ascending linear order.
  const int n = thinned.n();
  auto node_of = [&](const VoxelIndex& v) -> std::uint32_t {
    const std::uint64_t key = linear_key(v, n);
    const auto it = std::lower_bound(
        voxels.begin(), voxels.end(), key,
        [n](const VoxelIndex& a, std::uint64_t k) {
          return linear_key(a, n) < k;
        });
    return static_cast<std::uint32_t>(it - voxels.begin());
  };

  graph.branch_labels.assign(voxels.size(), -1);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> raw_edges;
  int next_label = 0;
  std::vector<std::uint32_t> stack;
  VoxelIndex nbuf[26];
  for (std::uint32_t start = 0; start < voxels.size(); ++start) {
    if (graph.branch_labels[start] != -1) continue;
    const int label = next_label++;
    graph.branch_labels[start] = label;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::uint32_t cur = stack.back();
      stack.pop_back();
      const int m = neighbors26(voxels[cur], n, nbuf);
      for (int a = 0; a < m; ++a) {
        if (!thinned.get(nbuf[a])) continue;
        const std::uint32_t nb = node_of(nbuf[a]);
        raw_edges.emplace_back(std::min(cur, nb), std::max(cur, nb));
        if (graph.branch_labels[nb] == -1) {
          graph.branch_labels[nb] = label;
          stack.push_back(nb);
        }
      }
    }
  }
  // Every adjacency was recorded from both endpoints; canonicalize once.
  std::sort(raw_edges.begin(), raw_edges.end());
  raw_edges.erase(std::unique(raw_edges.begin(), raw_edges.end()),
                  raw_edges.end());
  graph.edges = std::move(raw_edges);
  return graph;
}

// Branches in descending node count; ties broken by lower minimum z, then
// lower branch id.
inline std::vector<Branch> branches_sorted(const SkeletonGraph& graph) {
  if (graph.nodes.empty()) throw EmptyInput("branches_sorted: empty graph");
  std::vector<Branch> branches(graph.branch_count());
  for (std::size_t b = 0; b < branches.size(); ++b) {
    branches[b].id = static_cast<int>(b);
  }
  for (std::uint32_t idx = 0; idx < graph.nodes.size(); ++idx) {
    Branch& br = branches[graph.branch_labels[idx]];
    if (br.node_indices.empty() ||
        graph.nodes[idx].position.z < graph.nodes[br.min_z_node].position.z) {
      br.min_z_node = idx;
    }
    br.node_indices.push_back(idx);
  }
  for (auto& br : branches) br.node_count = br.node_indices.size();
  std::sort(branches.begin(), branches.end(),
            [&](const Branch& a, const Branch& b) {
              if (a.node_count != b.node_count)
                return a.node_count > b.node_count;
              const double za = graph.nodes[a.min_z_node].position.z;
              const double zb = graph.nodes[b.min_z_node].position.z;
              if (za != zb) return za < zb;
              return a.id < b.id;
            });
  return branches;
}

// Breakpoints: branch nodes of graph degree <= 1, bottom to top (ascending
// z, ties by node index).
inline std::vector<std::uint32_t> find_breakpoints(const SkeletonGraph& graph,
                                                   const Branch& branch) {
  const std::vector<int> deg = node_degrees(graph);
  std::vector<std::uint32_t> out;
  for (const std::uint32_t idx : branch.node_indices) {
    if (deg[idx] <= 1) out.push_back(idx);
  }
  std::sort(out.begin(), out.end(), [&](std::uint32_t a, std::uint32_t b) {
    const double za = graph.nodes[a].position.z;
    const double zb = graph.nodes[b].position.z;
    if (za != zb) return za < zb;
    return a < b;
  });
  return out;
}

}  // namespace skeletree
