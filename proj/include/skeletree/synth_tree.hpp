// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "skeletree/errors.hpp"
#include "skeletree/point_cloud.hpp"
#include "skeletree/rng.hpp"
#include "skeletree/skeleton_graph.hpp"
#include "skeletree/vec3.hpp"
#include "skeletree/wood_leaf_filter.hpp"

namespace skeletree {

struct AngleRange {
  double lo_deg = 20.0;
  double hi_deg = 45.0;
};

// A deleted window along one branch, addressed by its child-index path from
// the trunk (empty path = trunk). Fractions are of the branch's length.
struct OcclusionGap {
  std::vector<int> branch_path;
  double start_frac = 0.0;
  double length_frac = 0.0;
};

struct TreeSpec {
  int depth = 3;
  double trunk_height = 20.0;
  double trunk_radius = 0.3;
  AngleRange branch_angle_range;
  double radius_decay = 0.6;
  double points_per_m2 = 8000.0;
  double leaf_fraction = 0.0;
  std::vector<OcclusionGap> occlusion_gaps;
  std::uint64_t seed = 1;
};

struct CenterlineVertex {
  Vec3 position;
  double radius = 0.0;
};

using Centerline = std::vector<CenterlineVertex>;

// Ellipsoid holding a leaf cluster: center plus an orthonormal frame with
// per-axis semi-lengths.
struct LeafRegion {
  Vec3 center;
  Vec3 axis_u, axis_v, axis_w;
  double semi_u = 0, semi_v = 0, semi_w = 0;

  bool contains(const Vec3& p, double tol = 1e-9) const {
    const Vec3 d = p - center;
    const double a = dot(d, axis_u) / semi_u;
    const double b = dot(d, axis_v) / semi_v;
    const double c = dot(d, axis_w) / semi_w;
    return a * a + b * b + c * c <= 1.0 + tol;
  }
};

struct GroundTruth {
  std::vector<Centerline> centerlines;  // one straight polyline per branch
  std::vector<ClassLabel> labels;       // parallel to the emitted cloud
  std::vector<LeafRegion> leaf_regions;
};

namespace detail {

struct BranchNode {
  Vec3 start;
  Vec3 dir;  // unit
  double length = 0;
  double start_radius = 0;
  double end_radius = 0;
  std::vector<int> path;
  bool is_tip = false;
};

// Child branch length relative to its parent. The spec of the tree shape
// leaves this free; a fixed fraction keeps the silhouette plausible.
constexpr double kChildLengthScale = 0.7;

inline void validate(const TreeSpec& spec) {
  if (spec.depth < 0) throw InvalidSpec("tree spec: depth must be >= 0");
  if (!(spec.trunk_height > 0)) {
    throw InvalidSpec("tree spec: trunk_height must be > 0");
  }
  if (!(spec.trunk_radius > 0)) {
    throw InvalidSpec("tree spec: trunk_radius must be > 0");
  }
  if (!(spec.radius_decay > 0 && spec.radius_decay <= 1)) {
    throw InvalidSpec("tree spec: radius_decay must be in (0, 1]");
  }
  if (!(spec.points_per_m2 > 0)) {
    throw InvalidSpec("tree spec: points_per_m2 must be > 0");
  }
  if (!(spec.leaf_fraction >= 0 && spec.leaf_fraction < 1)) {
    throw InvalidSpec("tree spec: leaf_fraction must be in [0, 1)");
  }
  if (!(spec.branch_angle_range.lo_deg >= 0 &&
        spec.branch_angle_range.lo_deg <= spec.branch_angle_range.hi_deg &&
        spec.branch_angle_range.hi_deg < 90)) {
    throw InvalidSpec("tree spec: branch_angle_range must satisfy 0 <= lo <= hi < 90");
  }
  for (const auto& gap : spec.occlusion_gaps) {
    if (!(gap.start_frac >= 0 && gap.length_frac >= 0 &&
          gap.start_frac + gap.length_frac <= 1)) {
      throw InvalidSpec("tree spec: gap window must lie within [0, 1]");
    }
    if (static_cast<int>(gap.branch_path.size()) > spec.depth) {
      throw InvalidSpec("tree spec: gap path deeper than the tree");
    }
  }
}

// Builds the branch structure depth-first, parent before children, children
// in index order; the traversal order fixes the random sequence.
inline void grow(const TreeSpec& spec, Rng& rng, const BranchNode& branch,
                 int depth_left, std::vector<BranchNode>& out) {
  BranchNode recorded = branch;
  recorded.is_tip = depth_left == 0;
  out.push_back(recorded);
  if (depth_left == 0) return;
  const int children = rng.uniform_int(2, 3);
  const Vec3 tip = branch.start + branch.dir * branch.length;
  Vec3 u, v;
  plane_basis(branch.dir, u, v);
  const double azimuth0 = rng.uniform(0.0, 2.0 * M_PI);
  for (int c = 0; c < children; ++c) {
    const double polar = deg_to_rad(rng.uniform(
        spec.branch_angle_range.lo_deg, spec.branch_angle_range.hi_deg));
    const double azimuth =
        azimuth0 + 2.0 * M_PI * static_cast<double>(c) / children +
        rng.uniform(-0.3, 0.3);
    const Vec3 dir = (branch.dir * std::cos(polar) +
                      (u * std::cos(azimuth) + v * std::sin(azimuth)) *
                          std::sin(polar))
                         .normalized();
    BranchNode child;
    child.start = tip;
    child.dir = dir;
    child.length = branch.length * kChildLengthScale;
    child.start_radius = branch.end_radius;
    child.end_radius = branch.end_radius * spec.radius_decay;
    child.path = branch.path;
    child.path.push_back(c);
    grow(spec, rng, child, depth_left - 1, out);
  }
}

}  // namespace detail

// Generates a synthetic tree scan with ground truth. Wood points are sampled
// on the branches' conical surfaces with truncated Gaussian radial noise
// (sigma = 0.2 x local radius, cut at 2.5 sigma, so every wood point stays
// within 1.5x the local radius of its centerline). Leaf points fill
// ellipsoids at the tips. Occlusion gap windows emit no points at all.
// Deterministic for a fixed spec.
inline std::pair<PointCloud, GroundTruth> generate(const TreeSpec& spec) {
  detail::validate(spec);
  Rng rng(spec.seed);

  detail::BranchNode trunk;
  trunk.start = {0, 0, 0};
  trunk.dir = {0, 0, 1};
  trunk.length = spec.trunk_height;
  trunk.start_radius = spec.trunk_radius;
  trunk.end_radius = spec.trunk_radius * spec.radius_decay;
  std::vector<detail::BranchNode> branches;
  detail::grow(spec, rng, trunk, spec.depth, branches);

  // Gap paths must address real branches.
  for (const auto& gap : spec.occlusion_gaps) {
    const bool found =
        std::any_of(branches.begin(), branches.end(),
                    [&](const detail::BranchNode& b) {
                      return b.path == gap.branch_path;
                    });
    if (!found) throw InvalidSpec("tree spec: gap path matches no branch");
  }

  PointCloud cloud;
  cloud.source_path = "synthetic";
  cloud.has_intensity = true;
  GroundTruth truth;

  for (const auto& branch : branches) {
    truth.centerlines.push_back(
        {{branch.start, branch.start_radius},
         {branch.start + branch.dir * branch.length, branch.end_radius}});

    std::vector<const OcclusionGap*> gaps;
    for (const auto& gap : spec.occlusion_gaps) {
      if (gap.branch_path == branch.path) gaps.push_back(&gap);
    }

    const double area = M_PI * (branch.start_radius + branch.end_radius) *
                        branch.length;
    const auto count =
        static_cast<std::size_t>(std::llround(spec.points_per_m2 * area));
    Vec3 u, v;
    plane_basis(branch.dir, u, v);
    for (std::size_t s = 0; s < count; ++s) {
      const double t = rng.uniform();
      const double theta = rng.uniform(0.0, 2.0 * M_PI);
      const double radius =
          branch.start_radius +
          (branch.end_radius - branch.start_radius) * t;
      const double radial =
          radius + rng.truncated_normal(0.0, 0.2 * radius, 2.5);
      const double intensity = rng.normal(100.0, 5.0);
      const bool in_gap =
          std::any_of(gaps.begin(), gaps.end(), [&](const OcclusionGap* g) {
            return t >= g->start_frac &&
                   t < g->start_frac + g->length_frac;
          });
      if (in_gap) continue;  // after the draws, to keep the stream aligned
      const Vec3 p = branch.start + branch.dir * (t * branch.length) +
                     (u * std::cos(theta) + v * std::sin(theta)) * radial;
      cloud.points.push_back({p.x, p.y, p.z, intensity});
      truth.labels.push_back(ClassLabel::wood);
    }
  }

  if (spec.leaf_fraction > 0) {
    std::vector<const detail::BranchNode*> tips;
    for (const auto& b : branches) {
      if (b.is_tip) tips.push_back(&b);
    }
    const double ratio = spec.leaf_fraction / (1.0 - spec.leaf_fraction);
    const auto total_leaves = static_cast<std::size_t>(
        std::llround(static_cast<double>(cloud.points.size()) * ratio));
    for (std::size_t ti = 0; ti < tips.size(); ++ti) {
      const detail::BranchNode& b = *tips[ti];
      std::size_t quota = total_leaves / tips.size();
      if (ti < total_leaves % tips.size()) ++quota;
      if (quota == 0) continue;
      LeafRegion region;
      Vec3 u, v;
      plane_basis(b.dir, u, v);
      region.axis_u = u;
      region.axis_v = v;
      region.axis_w = b.dir;
      region.semi_u = region.semi_v = 0.3 * b.length;
      region.semi_w = 0.4 * b.length;
      region.center = b.start + b.dir * (b.length + 0.2 * b.length);
      truth.leaf_regions.push_back(region);
      for (std::size_t s = 0; s < quota; ++s) {
        double x, y, z;
        do {
          x = rng.uniform(-1.0, 1.0);
          y = rng.uniform(-1.0, 1.0);
          z = rng.uniform(-1.0, 1.0);
        } while (x * x + y * y + z * z > 1.0);
        const Vec3 p = region.center + region.axis_u * (region.semi_u * x) +
                       region.axis_v * (region.semi_v * y) +
                       region.axis_w * (region.semi_w * z);
        const double intensity = rng.normal(10.0, 5.0);
        cloud.points.push_back({p.x, p.y, p.z, intensity});
        truth.labels.push_back(ClassLabel::leaf);
      }
    }
  }

  if (cloud.points.empty()) {
    throw InvalidSpec("tree spec: generated zero points");
  }
  return {std::move(cloud), std::move(truth)};
}

struct AccuracyReport {
  double mean_dist = 0;   // meters, extracted nodes to truth centerline
  double hausdorff = 0;   // meters, worst node
  double completeness = 0;  // covered fraction of the qualifying centerline
};

// Compares an extracted skeleton against the generator's centerlines.
// Truth polylines are resampled at 1 cm. Completeness only counts branches
// long enough to support p_t skeleton nodes (shorter ones are legitimately
// pruned by the node-count gate); a truth sample is covered when an
// extracted node lies within 2 voxel diagonals.
inline AccuracyReport skeleton_accuracy(const SkeletonGraph& extracted,
                                        const GroundTruth& truth,
                                        double voxel_diagonal, int p_t = 4) {
  if (extracted.nodes.empty()) {
    throw EmptyInput("skeleton_accuracy: empty skeleton");
  }
  if (truth.centerlines.empty()) {
    throw EmptyInput("skeleton_accuracy: empty ground truth");
  }
  constexpr double kStep = 0.01;

  std::vector<Vec3> samples;
  std::vector<std::uint8_t> qualifying;
  for (const auto& line : truth.centerlines) {
    double total_length = 0;
    for (std::size_t s = 1; s < line.size(); ++s) {
      total_length += (line[s].position - line[s - 1].position).norm();
    }
    const bool counts =
        total_length >= static_cast<double>(p_t) * voxel_diagonal;
    for (std::size_t s = 1; s < line.size(); ++s) {
      const Vec3 a = line[s - 1].position;
      const Vec3 b = line[s].position;
      const double seg = (b - a).norm();
      const int steps = std::max(1, static_cast<int>(seg / kStep));
      for (int i = 0; i <= steps; ++i) {
        const double t = static_cast<double>(i) / steps;
        samples.push_back(a + (b - a) * t);
        qualifying.push_back(counts ? 1 : 0);
      }
    }
  }

  // Node-to-centerline distances.
  double sum = 0;
  double worst = 0;
  std::vector<double> node_dist(extracted.nodes.size());
  parallel_for(extracted.nodes.size(), [&](std::size_t i) {
    const Vec3 p = extracted.nodes[i].position;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : samples) {
      best = std::min(best, (s - p).squared_norm());
    }
    node_dist[i] = std::sqrt(best);
  });
  for (const double d : node_dist) {
    sum += d;
    worst = std::max(worst, d);
  }

  // Coverage of the qualifying centerline samples.
  const double cover = 2.0 * voxel_diagonal;
  const double cover_sq = cover * cover;
  std::size_t qualifying_total = 0;
  std::vector<std::uint8_t> covered(samples.size(), 0);
  parallel_for(samples.size(), [&](std::size_t i) {
    if (!qualifying[i]) return;
    for (const auto& node : extracted.nodes) {
      if ((node.position - samples[i]).squared_norm() <= cover_sq) {
        covered[i] = 1;
        return;
      }
    }
  });
  std::size_t covered_total = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!qualifying[i]) continue;
    ++qualifying_total;
    covered_total += covered[i];
  }

  AccuracyReport report;
  report.mean_dist = sum / static_cast<double>(extracted.nodes.size());
  report.hausdorff = worst;
  report.completeness =
      qualifying_total == 0
          ? 1.0
          : static_cast<double>(covered_total) /
                static_cast<double>(qualifying_total);
  return report;
}

}  // namespace skeletree
