// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <utility>

#include "skeletree/baseline_gsa.hpp"
#include "skeletree/breakpoint_connect.hpp"
#include "skeletree/errors.hpp"
#include "skeletree/metrics.hpp"
#include "skeletree/point_cloud.hpp"
#include "skeletree/refine.hpp"
#include "skeletree/skeleton_graph.hpp"
#include "skeletree/thinning.hpp"
#include "skeletree/voxel_grid.hpp"
#include "skeletree/wood_leaf_filter.hpp"

namespace skeletree {

struct RefineParams {
  double slice_thickness = 0;  // <= 0 means "use the voxel z-size"
  double residual_switch = 0.15;
  double lambda = 0.5;
  int iterations = 3;
};

struct PipelineConfig {
  FilterConfig filter;
  int n_divisions = 100;
  double wood_voxel_ratio = 0.25;
  int max_thinning_passes = 0;  // 0 = run to fixpoint
  ConnectParams connect;
  bool connect_enabled = true;
  RefineParams refine;
  bool refine_enabled = true;
  std::string tree_id;  // report label; defaults to the source file stem
};

namespace detail {

template <typename Fn>
auto stage(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw PipelineError(name, e.what());
  }
}

inline std::string default_tree_id(const PointCloud& cloud) {
  const std::string stem =
      std::filesystem::path(cloud.source_path).stem().string();
  return stem.empty() ? "cloud" : stem;
}

}  // namespace detail

// The full extraction flow: classification and leaf filtering, anisotropic
// voxelization with wood-voxel selection, topology-preserving thinning, raw
// graph construction, breakpoint connection, recentering, and smoothing.
// Disabled stages pass their input through. Stage failures carry the stage
// name; timing covers classification through the final skeleton and no file
// I/O.
inline std::pair<SkeletonGraph, RunReport> run_ftsem(
    const PointCloud& cloud, const PipelineConfig& cfg) {
  if (cloud.empty()) throw EmptyCloud("run_ftsem: empty cloud");
  StageTimer timer;

  const PointCloud wood = detail::stage("filter", [&] {
    const auto labels = classify_points(cloud, cfg.filter);
    return filter_wood(cloud, labels);
  });
  if (wood.empty()) {
    throw FilterRemovedEverything(
        "filter: every point was classified as leaf");
  }
  timer.lap("filter");

  VoxelGrid grid = detail::stage("voxelize", [&] {
    VoxelGrid g = build_grid(wood, cfg.n_divisions);
    mark_wood_voxels(g, cfg.wood_voxel_ratio);
    return g;
  });
  timer.lap("voxelize");

  const BinaryGrid thinned = detail::stage("thin", [&] {
    return thin(wood_binary(grid), cfg.max_thinning_passes);
  });
  timer.lap("thin");

  SkeletonGraph graph = detail::stage("graph", [&] {
    return build_raw_skeleton(thinned, grid, wood);
  });
  timer.lap("graph");

  if (cfg.connect_enabled) {
    graph = detail::stage("connect", [&] {
      return connect_all(std::move(graph), cfg.connect);
    });
  }
  timer.lap("connect");

  if (cfg.refine_enabled) {
    const double thickness = cfg.refine.slice_thickness > 0
                                 ? cfg.refine.slice_thickness
                                 : grid.config.voxel_size.z;
    const double lateral_limit = 3.0 * grid.config.voxel_size.norm();
    graph = detail::stage("recenter", [&] {
      return recenter_nodes(std::move(graph), wood, grid, thickness,
                            cfg.refine.residual_switch, lateral_limit);
    });
    timer.lap("recenter");
    graph = detail::stage("smooth", [&] {
      return laplacian_smooth(std::move(graph), cfg.refine.lambda,
                              cfg.refine.iterations);
    });
    timer.lap("smooth");
  } else {
    timer.lap("recenter");
    timer.lap("smooth");
  }

  RunReport report;
  report.tree_id =
      cfg.tree_id.empty() ? detail::default_tree_id(cloud) : cfg.tree_id;
  report.algorithm = "ftsem";
  report.point_count = cloud.size();
  report.node_count = graph.nodes.size();
  report.stage_timings = timer.laps();
  report.runtime_s = timer.total();
  report.tpmp_s = compute_tpmp(report.runtime_s, report.point_count);
  report.residual_branch_count = graph.branch_count();
  return {std::move(graph), std::move(report)};
}

// The baseline under the same timing contract as run_ftsem.
inline std::pair<SkeletonGraph, RunReport> run_gsa(
    const PointCloud& cloud, const GsaParams& params,
    const std::string& tree_id = "") {
  StageTimer timer;
  SkeletonGraph graph = detail::stage("gsa", [&] {
    return extract_gsa(cloud, params);
  });
  timer.lap("gsa");

  RunReport report;
  report.tree_id = tree_id.empty() ? detail::default_tree_id(cloud) : tree_id;
  report.algorithm = "gsa";
  report.point_count = cloud.size();
  report.node_count = graph.nodes.size();
  report.stage_timings = timer.laps();
  report.runtime_s = timer.total();
  report.tpmp_s = compute_tpmp(report.runtime_s, report.point_count);
  report.residual_branch_count = graph.branch_count();
  return {std::move(graph), std::move(report)};
}

}  // namespace skeletree
