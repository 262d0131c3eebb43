// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "skeletree/vec3.hpp"

namespace skeletree {

// One scanned point: position in meters plus an optional return-intensity
// scalar. Intensity is absent when the source file had no such column.
struct Point3I {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  std::optional<double> intensity;

  Vec3 pos() const { return {x, y, z}; }
};

struct PointCloud {
  std::vector<Point3I> points;
  std::string source_path;
  bool has_intensity = false;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

}  // namespace skeletree
