// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "skeletree/errors.hpp"
#include "skeletree/point_cloud.hpp"
#include "skeletree/voxel_grid.hpp"

namespace skeletree {

enum class ClassLabel : std::uint8_t { wood, leaf };

enum class FilterMethod {
  intensity_otsu,
  intensity_fixed,
  density_only,
  passthrough,
};

struct FilterConfig {
  FilterMethod method = FilterMethod::intensity_otsu;
  double fixed_threshold = 0.0;  // used by intensity_fixed only
  double density_ratio_threshold = 0.25;
  // Wood is assumed to return stronger than leaves; set for scanners where
  // the opposite holds.
  bool invert_intensity = false;
};

// Histogram threshold maximizing between-class variance over 256 bins
// spanning [min, max]. Returns the upper edge of the best split bin, so the
// threshold always separates the two classes strictly.
inline double otsu_threshold(std::span<const double> values) {
  if (values.size() < 2) {
    throw DegenerateInput("otsu_threshold: need at least 2 values");
  }
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (lo == hi) throw DegenerateInput("otsu_threshold: all values equal");

  constexpr int kBins = 256;
  const double width = (hi - lo) / kBins;
  std::vector<std::size_t> hist(kBins, 0);
  for (const double v : values) {
    int bin = static_cast<int>((v - lo) / width);
    if (bin > kBins - 1) bin = kBins - 1;
    ++hist[bin];
  }

  const double total = static_cast<double>(values.size());
  double sum_all = 0;
  for (int b = 0; b < kBins; ++b) {
    sum_all += static_cast<double>(b) * static_cast<double>(hist[b]);
  }
  double best_score = -1;
  int best_split = 0;
  double w0 = 0, sum0 = 0;
  for (int b = 0; b < kBins - 1; ++b) {
    w0 += static_cast<double>(hist[b]);
    sum0 += static_cast<double>(b) * static_cast<double>(hist[b]);
    const double w1 = total - w0;
    if (w0 == 0 || w1 == 0) continue;
    const double mean0 = sum0 / w0;
    const double mean1 = (sum_all - sum0) / w1;
    const double score = w0 * w1 * (mean0 - mean1) * (mean0 - mean1);
    if (score > best_score) {
      best_score = score;
      best_split = b;
    }
  }
  return lo + width * static_cast<double>(best_split + 1);
}

namespace detail {

// Wood flag per point from voxel occupancy: a point is wood-dense when its
// voxel's count reaches the ratio of the median occupied count.
inline std::vector<std::uint8_t> density_flags(const PointCloud& cloud,
                                               double ratio) {
  VoxelGrid grid = build_grid(cloud, 100);
  mark_wood_voxels(grid, ratio);
  std::vector<std::uint8_t> flags(cloud.size(), 0);
  for (std::size_t c = 0; c < grid.occupied_count(); ++c) {
    if (!grid.is_wood_cell(c)) continue;
    for (const std::size_t p : grid.cell_point_indices(c)) flags[p] = 1;
  }
  return flags;
}

}  // namespace detail

inline std::vector<ClassLabel> classify_points(const PointCloud& cloud,
                                               const FilterConfig& cfg) {
  if (cloud.empty()) throw EmptyCloud("classify_points: empty cloud");
  std::vector<ClassLabel> labels(cloud.size(), ClassLabel::wood);
  if (cfg.method == FilterMethod::passthrough) return labels;

  const bool needs_intensity = cfg.method == FilterMethod::intensity_otsu ||
                               cfg.method == FilterMethod::intensity_fixed;
  if (needs_intensity && !cloud.has_intensity) {
    throw MissingIntensity(
        "classify_points: intensity-based method on a cloud without "
        "intensity");
  }

  const std::vector<std::uint8_t> dense =
      detail::density_flags(cloud, cfg.density_ratio_threshold);
  if (cfg.method == FilterMethod::density_only) {
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      labels[i] = dense[i] ? ClassLabel::wood : ClassLabel::leaf;
    }
    return labels;
  }
  double threshold = cfg.fixed_threshold;
  if (cfg.method == FilterMethod::intensity_otsu) {
    std::vector<double> values(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      values[i] = *cloud.points[i].intensity;
    }
    threshold = otsu_threshold(values);
  }
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double v = *cloud.points[i].intensity;
    bool wood = cfg.invert_intensity ? v <= threshold : v >= threshold;
    wood = wood && dense[i];  // density refinement on top of intensity
    labels[i] = wood ? ClassLabel::wood : ClassLabel::leaf;
  }
  return labels;
}

// Keeps exactly the wood-labeled points, order preserved. May return an
// empty cloud; the pipeline turns that into FilterRemovedEverything.
inline PointCloud filter_wood(const PointCloud& cloud,
                              std::span<const ClassLabel> labels) {
  if (labels.size() != cloud.size()) {
    throw LengthMismatch("filter_wood: labels length != point count");
  }
  PointCloud out;
  out.source_path = cloud.source_path;
  out.has_intensity = cloud.has_intensity;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (labels[i] == ClassLabel::wood) out.points.push_back(cloud.points[i]);
  }
  return out;
}

}  // namespace skeletree
