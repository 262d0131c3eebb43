// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "skeletree/errors.hpp"
#include "skeletree/skeleton_graph.hpp"
#include "skeletree/vec3.hpp"

namespace skeletree {

struct ConnectParams {
  int p_t = 4;               // branch node-count gate
  double theta_t_deg = 120;  // angle gate in degrees
  int k_candidates = 5;      // nearest candidate nodes examined per breakpoint
  double bd_factor = 3;      // distance leash relative to the fallback node
  bool candidates_endpoints_only = false;
};

inline void validate(const ConnectParams& p) {
  if (p.p_t < 1) throw InvalidArgument("connect: p_t must be >= 1");
  if (!(p.theta_t_deg > 90.0 && p.theta_t_deg < 180.0)) {
    throw InvalidArgument("connect: theta_t must lie in (90, 180) degrees");
  }
  if (p.k_candidates < 1) {
    throw InvalidArgument("connect: k_candidates must be >= 1");
  }
  if (!(p.bd_factor > 0.0)) {
    throw InvalidArgument("connect: bd_factor must be > 0");
  }
}

struct ConnectionGeometry {
  double bd = 0;  // Euclidean distance between the two end nodes, meters
  double cos_alpha = 0;  // angle between the two branch directions
  double cos_beta = 0;   // angle between breakpoint direction and the bridge
  double cos_gamma = 0;  // angle between candidate direction and the bridge
  Vec3 m_dir;            // unit direction at the breakpoint, into its branch
  Vec3 n_dir;            // unit direction at the candidate, into its branch
  Vec3 l_dir;            // unit direction of the joint fit, breakpoint->candidate
};

// Principal direction of a small point set (least-squares line through the
// centroid), sign-fixed: first the leading nonzero component is made
// positive, then the vector is flipped if its projection on orient_toward is
// negative. A zero orient_toward keeps the canonical sign.
inline Vec3 fit_direction(std::span<const Vec3> points,
                          const Vec3& orient_toward) {
  if (points.size() < 2) {
    throw DegenerateFit("fit_direction: need at least 2 points");
  }
  const Vec3 centroid = barycenter(points);
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : points) {
    const Vec3 d = p - centroid;
    const Eigen::Vector3d e(d.x, d.y, d.z);
    cov += e * e.transpose();
  }
  if (cov.trace() <= 1e-30) {
    throw DegenerateFit("fit_direction: points coincide");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  const Eigen::Vector3d principal = es.eigenvectors().col(2);
  Vec3 dir{principal.x(), principal.y(), principal.z()};
  dir = dir.normalized();
  if (dir.x < 0 || (dir.x == 0 && (dir.y < 0 || (dir.y == 0 && dir.z < 0)))) {
    dir = -dir;
  }
  if (dot(dir, orient_toward) < 0) dir = -dir;
  return dir;
}

// Geometry of a prospective bridge between two chain ends. a_points and
// b_points each start with the end node itself followed by its linked
// neighbors. m and n point from their end node into its own chain; when an
// end sits mid-chain and its neighbors straddle it, the sense falls back to
// "away from the other end". l is fitted through all points, breakpoint
// toward candidate.
inline ConnectionGeometry connection_geometry(std::span<const Vec3> a_points,
                                              std::span<const Vec3> b_points) {
  if (a_points.size() < 2 || b_points.size() < 2) {
    throw DegenerateFit("connection_geometry: need >= 2 points per side");
  }
  const Vec3 a = a_points[0];
  const Vec3 b = b_points[0];

  auto inward_sense = [](std::span<const Vec3> side, const Vec3& other_end) {
    const Vec3 end = side[0];
    Vec3 sum{0, 0, 0};
    for (std::size_t i = 1; i < side.size(); ++i) sum += side[i];
    Vec3 sense = sum / static_cast<double>(side.size() - 1) - end;
    if (sense.norm() < 1e-12) sense = end - other_end;
    return sense;
  };

  ConnectionGeometry g;
  g.m_dir = fit_direction(a_points, inward_sense(a_points, b));
  g.n_dir = fit_direction(b_points, inward_sense(b_points, a));

  std::vector<Vec3> joint(a_points.begin(), a_points.end());
  joint.insert(joint.end(), b_points.begin(), b_points.end());
  g.l_dir = fit_direction(joint, b - a);

  g.bd = (b - a).norm();
  g.cos_alpha = dot(g.m_dir, g.n_dir);
  g.cos_beta = dot(g.m_dir, g.l_dir);
  g.cos_gamma = dot(g.n_dir, g.l_dir);
  return g;
}

// Of the two largest branches, the one whose lowest node sits deeper is the
// main branch (the trunk reaches the ground); a single branch is its own
// main.
inline int select_main_branch(const SkeletonGraph& graph,
                              const std::vector<Branch>& branches) {
  if (branches.empty()) throw EmptyInput("select_main_branch: no branches");
  if (branches.size() == 1) return branches[0].id;
  const double z0 = graph.nodes[branches[0].min_z_node].position.z;
  const double z1 = graph.nodes[branches[1].min_z_node].position.z;
  return z1 < z0 ? branches[1].id : branches[0].id;
}

namespace detail {

// The end node plus its two closest linked neighbors, as fitting input.
// A degree-1 end extends one step farther along its chain; fewer than two
// reachable neighbors yields a short (or singleton) list.
inline std::vector<Vec3> direction_frame(
    const SkeletonGraph& graph,
    const std::vector<std::vector<std::uint32_t>>& adj, std::uint32_t node) {
  const Vec3 p = graph.nodes[node].position;
  std::vector<Vec3> frame{p};
  auto closest_sorted = [&](std::uint32_t center, std::uint32_t exclude) {
    std::vector<std::uint32_t> list;
    for (const std::uint32_t nb : adj[center]) {
      if (nb != exclude) list.push_back(nb);
    }
    std::sort(list.begin(), list.end(), [&](std::uint32_t x, std::uint32_t y) {
      const double dx =
          (graph.nodes[x].position - graph.nodes[center].position)
              .squared_norm();
      const double dy =
          (graph.nodes[y].position - graph.nodes[center].position)
              .squared_norm();
      if (dx != dy) return dx < dy;
      return x < y;
    });
    return list;
  };
  const auto first = closest_sorted(node, node);
  if (first.empty()) return frame;
  frame.push_back(graph.nodes[first[0]].position);
  if (first.size() >= 2) {
    frame.push_back(graph.nodes[first[1]].position);
  } else {
    const auto second = closest_sorted(first[0], node);
    if (!second.empty()) frame.push_back(graph.nodes[second[0]].position);
  }
  return frame;
}

}  // namespace detail

// Joins separated branches to the main branch, bottom to top. Per branch
// (skipped unless its node count exceeds p_t), each breakpoint gathers the
// k nearest main-branch nodes, gates them on the angle tests, and bridges to
// the closest survivor — unless a nearer wide-angle fallback node M wins the
// comparison. A branch that connects is absorbed into the main branch so
// branches above it may attach to its nodes. At most one bridge per branch.
inline SkeletonGraph connect_all(SkeletonGraph graph,
                                 const ConnectParams& params) {
  validate(params);
  if (graph.nodes.empty()) return graph;
  relabel_components(graph);
  const std::vector<Branch> branches = branches_sorted(graph);
  if (branches.size() <= 1) return graph;
  const int main_id = select_main_branch(graph, branches);

  std::vector<std::uint8_t> in_main(graph.nodes.size(), 0);
  for (const auto& br : branches) {
    if (br.id != main_id) continue;
    for (const std::uint32_t idx : br.node_indices) in_main[idx] = 1;
  }

  // Non-main branches from the ground up.
  std::vector<const Branch*> order;
  for (const auto& br : branches) {
    if (br.id != main_id) order.push_back(&br);
  }
  std::sort(order.begin(), order.end(), [&](const Branch* x, const Branch* y) {
    const double zx = graph.nodes[x->min_z_node].position.z;
    const double zy = graph.nodes[y->min_z_node].position.z;
    if (zx != zy) return zx < zy;
    return x->id < y->id;
  });

  const double cos_t = std::cos(deg_to_rad(params.theta_t_deg));
  const double abs_cos_t = std::abs(cos_t);

  for (const Branch* branch : order) {
    if (branch->node_count <= static_cast<std::size_t>(params.p_t)) continue;

    const auto adj = adjacency_lists(graph);
    std::vector<std::uint32_t> main_nodes;
    for (std::uint32_t idx = 0; idx < graph.nodes.size(); ++idx) {
      if (!in_main[idx]) continue;
      if (params.candidates_endpoints_only && adj[idx].size() > 1) continue;
      main_nodes.push_back(idx);
    }
    if (main_nodes.empty()) continue;

    std::optional<std::pair<std::uint32_t, std::uint32_t>> new_edge;
    bool abandoned = false;

    for (const std::uint32_t bp : find_breakpoints(graph, *branch)) {
      const std::vector<Vec3> a_frame = detail::direction_frame(graph, adj, bp);
      if (a_frame.size() < 2) continue;  // unfittable end; try the next one

      std::vector<std::uint32_t> by_distance = main_nodes;
      const Vec3 p = graph.nodes[bp].position;
      std::sort(by_distance.begin(), by_distance.end(),
                [&](std::uint32_t x, std::uint32_t y) {
                  const double dx = (graph.nodes[x].position - p).squared_norm();
                  const double dy = (graph.nodes[y].position - p).squared_norm();
                  if (dx != dy) return dx < dy;
                  return x < y;
                });

      struct Scored {
        std::uint32_t node;
        ConnectionGeometry geom;
      };
      std::vector<Scored> survivors;
      const std::size_t k = std::min<std::size_t>(
          by_distance.size(), static_cast<std::size_t>(params.k_candidates));
      for (std::size_t c = 0; c < k; ++c) {
        const std::uint32_t q = by_distance[c];
        const auto b_frame = detail::direction_frame(graph, adj, q);
        if (b_frame.size() < 2) continue;
        ConnectionGeometry g;
        try {
          g = connection_geometry(a_frame, b_frame);
        } catch (const DegenerateFit&) {
          continue;
        }
        if (g.cos_alpha <= cos_t && g.cos_beta <= cos_t &&
            g.cos_gamma >= abs_cos_t) {
          survivors.push_back({q, g});
        }
      }

      // Fallback node M: nearest main node whose branch direction opens an
      // angle strictly wider than theta_t against the breakpoint direction.
      std::optional<Scored> fallback;
      for (const std::uint32_t q : by_distance) {
        const auto b_frame = detail::direction_frame(graph, adj, q);
        if (b_frame.size() < 2) continue;
        ConnectionGeometry g;
        try {
          g = connection_geometry(a_frame, b_frame);
        } catch (const DegenerateFit&) {
          continue;
        }
        if (g.cos_alpha < cos_t) {
          fallback = Scored{q, g};
          break;
        }
      }

      if (survivors.empty()) {
        if (fallback) {
          new_edge = {bp, fallback->node};
        } else {
          abandoned = true;  // nothing to gain from higher breakpoints
        }
        break;
      }

      const auto best = std::min_element(
          survivors.begin(), survivors.end(), [](const Scored& x, const Scored& y) {
            if (x.geom.bd != y.geom.bd) return x.geom.bd < y.geom.bd;
            return x.node < y.node;
          });
      if (!fallback) {
        new_edge = {bp, best->node};
      } else if (best->geom.cos_alpha <= fallback->geom.cos_alpha &&
                 best->geom.bd <= params.bd_factor * fallback->geom.bd) {
        new_edge = {bp, best->node};
      } else {
        new_edge = {bp, fallback->node};
      }
      break;
    }

    (void)abandoned;
    if (new_edge) {
      graph.add_edge(new_edge->first, new_edge->second);
      for (const std::uint32_t idx : branch->node_indices) in_main[idx] = 1;
    }
  }

  relabel_components(graph);
  return graph;
}

}  // namespace skeletree
