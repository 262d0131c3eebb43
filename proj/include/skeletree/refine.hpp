// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "skeletree/errors.hpp"
#include "skeletree/skeleton_graph.hpp"
#include "skeletree/vec3.hpp"
#include "skeletree/voxel_grid.hpp"

namespace skeletree {

enum class FitModel { circle, ellipse };

struct SliceFit {
  FitModel model = FitModel::circle;
  Vec2 center;          // in the slice plane's (u, v) coordinates, meters
  double semi_major = 0;  // radius for a circle
  double semi_minor = 0;  // equals semi_major for a circle
  double rms_residual = 0;
};

namespace detail {

// Cross-section points near `center`: within +-thickness/2 of the plane with
// normal `tangent` and within lateral_limit of the axis, expressed in the
// plane's orthonormal (u, v) basis.
template <typename IndexRange>
std::vector<Vec2> slice_subset(const PointCloud& cloud,
                               const IndexRange& indices, const Vec3& center,
                               const Vec3& tangent, double thickness,
                               double lateral_limit) {
  Vec3 u, v;
  plane_basis(tangent, u, v);
  const double half = thickness / 2.0;
  const double limit_sq = lateral_limit * lateral_limit;
  std::vector<Vec2> out;
  for (const std::size_t idx : indices) {
    const Vec3 d = cloud.points[idx].pos() - center;
    if (std::abs(dot(d, tangent)) > half) continue;
    const Vec2 q{dot(d, u), dot(d, v)};
    if (q.x * q.x + q.y * q.y > limit_sq) continue;
    out.push_back(q);
  }
  return out;
}

struct AllIndices {
  std::size_t n;
  struct Iter {
    std::size_t i;
    std::size_t operator*() const { return i; }
    Iter& operator++() { ++i; return *this; }
    bool operator!=(const Iter& o) const { return i != o.i; }
  };
  Iter begin() const { return {0}; }
  Iter end() const { return {n}; }
};

}  // namespace detail

inline void check_slice_args(const Vec3& tangent, double thickness,
                             double lateral_limit) {
  if (std::abs(tangent.norm() - 1.0) > 1e-6) {
    throw InvalidArgument("slice_points: tangent must be unit length");
  }
  if (!(thickness > 0)) {
    throw InvalidArgument("slice_points: thickness must be > 0");
  }
  if (!(lateral_limit > 0)) {
    throw InvalidArgument("slice_points: lateral_limit must be > 0");
  }
}

inline std::vector<Vec2> slice_points(const PointCloud& cloud,
                                      const Vec3& center, const Vec3& tangent,
                                      double thickness, double lateral_limit) {
  check_slice_args(tangent, thickness, lateral_limit);
  auto out = detail::slice_subset(cloud, detail::AllIndices{cloud.size()},
                                  center, tangent, thickness, lateral_limit);
  if (out.empty()) throw EmptySlice("slice_points: no points in slice");
  return out;
}

// Algebraic least-squares circle (Kasa): minimizes the residual of
// x^2 + y^2 + D x + E y + F = 0 over D, E, F.
inline SliceFit fit_circle(std::span<const Vec2> pts) {
  if (pts.size() < 3) throw DegenerateFit("fit_circle: need >= 3 points");
  Eigen::MatrixXd A(pts.size(), 3);
  Eigen::VectorXd rhs(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    A(i, 0) = pts[i].x;
    A(i, 1) = pts[i].y;
    A(i, 2) = 1.0;
    rhs(i) = -(pts[i].x * pts[i].x + pts[i].y * pts[i].y);
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < 3) throw DegenerateFit("fit_circle: collinear points");
  const Eigen::Vector3d sol = qr.solve(rhs);
  const double cx = -sol(0) / 2.0;
  const double cy = -sol(1) / 2.0;
  const double r_sq = cx * cx + cy * cy - sol(2);
  if (!(r_sq > 0) || !std::isfinite(r_sq)) {
    throw DegenerateFit("fit_circle: no real radius");
  }
  SliceFit fit;
  fit.model = FitModel::circle;
  fit.center = {cx, cy};
  fit.semi_major = fit.semi_minor = std::sqrt(r_sq);
  double sum_sq = 0;
  for (const auto& p : pts) {
    const double dx = p.x - cx;
    const double dy = p.y - cy;
    const double resid = std::sqrt(dx * dx + dy * dy) - fit.semi_major;
    sum_sq += resid * resid;
  }
  fit.rms_residual = std::sqrt(sum_sq / static_cast<double>(pts.size()));
  return fit;
}

// Direct least-squares conic fit constrained to an ellipse
// (Halir-Flusser formulation of the Fitzgibbon method), with centroid shift
// and isotropic scaling for conditioning.
inline SliceFit fit_ellipse(std::span<const Vec2> pts) {
  if (pts.size() < 5) throw DegenerateFit("fit_ellipse: need >= 5 points");
  const std::size_t n = pts.size();
  double mx = 0, my = 0;
  for (const auto& p : pts) {
    mx += p.x;
    my += p.y;
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double spread = 0;
  for (const auto& p : pts) {
    spread += (p.x - mx) * (p.x - mx) + (p.y - my) * (p.y - my);
  }
  const double scale = std::sqrt(spread / static_cast<double>(n));
  if (!(scale > 0)) throw DegenerateFit("fit_ellipse: points coincide");

  Eigen::MatrixXd d1(n, 3), d2(n, 3);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = (pts[i].x - mx) / scale;
    const double y = (pts[i].y - my) / scale;
    d1(i, 0) = x * x;
    d1(i, 1) = x * y;
    d1(i, 2) = y * y;
    d2(i, 0) = x;
    d2(i, 1) = y;
    d2(i, 2) = 1.0;
  }
  const Eigen::Matrix3d s1 = d1.transpose() * d1;
  const Eigen::Matrix3d s2 = d1.transpose() * d2;
  const Eigen::Matrix3d s3 = d2.transpose() * d2;
  const Eigen::FullPivLU<Eigen::Matrix3d> lu(s3);
  if (!lu.isInvertible()) {
    throw DegenerateFit("fit_ellipse: degenerate point configuration");
  }
  const Eigen::Matrix3d t = -lu.solve(s2.transpose());
  const Eigen::Matrix3d m_full = s1 + s2 * t;
  Eigen::Matrix3d m;
  m.row(0) = m_full.row(2) / 2.0;
  m.row(1) = -m_full.row(1);
  m.row(2) = m_full.row(0) / 2.0;

  const Eigen::EigenSolver<Eigen::Matrix3d> es(m);
  int best = -1;
  for (int c = 0; c < 3; ++c) {
    if (std::abs(es.eigenvalues()(c).imag()) > 1e-12) continue;
    const Eigen::Vector3d v = es.eigenvectors().col(c).real();
    const double disc = 4.0 * v(0) * v(2) - v(1) * v(1);
    if (disc > 0) best = c;
  }
  if (best < 0) throw NotAnEllipse("fit_ellipse: constrained fit failed");
  Eigen::Vector3d quad = es.eigenvectors().col(best).real();
  const Eigen::Vector3d lin = t * quad;
  // Conic in scaled centered coordinates:
  const double a = quad(0), b = quad(1), c = quad(2);
  const double d = lin(0), e = lin(1), f = lin(2);

  const double det22 = 4.0 * a * c - b * b;  // > 0 by eigenvector selection
  const double ccx = (b * e - 2.0 * c * d) / det22;
  const double ccy = (b * d - 2.0 * a * e) / det22;

  // Semi-axes from the eigenvalues of the quadratic part and the conic value
  // at the center.
  const double k = a * ccx * ccx + b * ccx * ccy + c * ccy * ccy +
                   d * ccx + e * ccy + f;
  Eigen::Matrix2d q22;
  q22 << a, b / 2.0, b / 2.0, c;
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eq(q22);
  const double l0 = eq.eigenvalues()(0);
  const double l1 = eq.eigenvalues()(1);
  const double ax0_sq = -k / l0;
  const double ax1_sq = -k / l1;
  if (!(ax0_sq > 0) || !(ax1_sq > 0) || !std::isfinite(ax0_sq) ||
      !std::isfinite(ax1_sq)) {
    throw NotAnEllipse("fit_ellipse: axes are not real");
  }

  SliceFit fit;
  fit.model = FitModel::ellipse;
  fit.center = {mx + scale * ccx, my + scale * ccy};
  fit.semi_major = scale * std::sqrt(std::max(ax0_sq, ax1_sq));
  fit.semi_minor = scale * std::sqrt(std::min(ax0_sq, ax1_sq));

  // Sampson distance RMS as the residual measure.
  double sum_sq = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = (pts[i].x - mx) / scale;
    const double y = (pts[i].y - my) / scale;
    const double val = a * x * x + b * x * y + c * y * y + d * x + e * y + f;
    const double gx = 2.0 * a * x + b * y + d;
    const double gy = b * x + 2.0 * c * y + e;
    const double grad = std::sqrt(gx * gx + gy * gy);
    if (grad > 0) {
      const double resid = val / grad;
      sum_sq += resid * resid;
    }
  }
  fit.rms_residual = scale * std::sqrt(sum_sq / static_cast<double>(n));
  return fit;
}

// Moves chain nodes (degree <= 2) to the fitted cross-section center of the
// surrounding wood points. The slice is taken perpendicular to the local
// chain tangent; a circle is fitted first and replaced by an ellipse fit
// when the relative residual exceeds residual_switch. Junctions (degree >=
// 3) and nodes whose slice is empty or degenerate keep their position, and
// no node moves farther than lateral_limit.
inline SkeletonGraph recenter_nodes(SkeletonGraph graph,
                                    const PointCloud& cloud,
                                    const VoxelGrid& grid, double thickness,
                                    double residual_switch,
                                    double lateral_limit) {
  if (!(thickness > 0)) {
    throw InvalidArgument("recenter_nodes: thickness must be > 0");
  }
  if (!(lateral_limit > 0)) {
    throw InvalidArgument("recenter_nodes: lateral_limit must be > 0");
  }
  const auto adj = adjacency_lists(graph);
  std::vector<Vec3> updated(graph.nodes.size());
  const double reach =
      std::sqrt(lateral_limit * lateral_limit + thickness * thickness / 4.0);

  parallel_for(graph.nodes.size(), [&](std::size_t idx) {
    const Vec3 pos = graph.nodes[idx].position;
    updated[idx] = pos;
    const auto& nb = adj[idx];
    if (nb.empty() || nb.size() > 2) return;

    Vec3 tangent;
    if (nb.size() == 2) {
      tangent = graph.nodes[nb[1]].position - graph.nodes[nb[0]].position;
    } else {
      tangent = graph.nodes[nb[0]].position - pos;
    }
    if (tangent.norm() < 1e-12) return;
    tangent = tangent.normalized();

    // Candidate points from grid cells overlapping the slice's bounding box.
    VoxelIndex lo, hi;
    const Vec3& origin = grid.extent.min_corner;
    const Vec3& vs = grid.config.voxel_size;
    lo.i = static_cast<int>(std::floor((pos.x - reach - origin.x) / vs.x));
    hi.i = static_cast<int>(std::floor((pos.x + reach - origin.x) / vs.x));
    lo.j = static_cast<int>(std::floor((pos.y - reach - origin.y) / vs.y));
    hi.j = static_cast<int>(std::floor((pos.y + reach - origin.y) / vs.y));
    lo.k = static_cast<int>(std::floor((pos.z - reach - origin.z) / vs.z));
    hi.k = static_cast<int>(std::floor((pos.z + reach - origin.z) / vs.z));
    std::vector<std::size_t> candidates;
    grid.for_each_cell_in_box(lo, hi, [&](std::size_t cell) {
      const auto span = grid.cell_point_indices(cell);
      candidates.insert(candidates.end(), span.begin(), span.end());
    });

    const std::vector<Vec2> slice = detail::slice_subset(
        cloud, candidates, pos, tangent, thickness, lateral_limit);
    if (slice.size() < 3) return;

    SliceFit fit;
    try {
      fit = fit_circle(slice);
    } catch (const DegenerateFit&) {
      return;
    }
    if (fit.semi_major > 0 &&
        fit.rms_residual / fit.semi_major > residual_switch &&
        slice.size() >= 5) {
      try {
        fit = fit_ellipse(slice);
      } catch (const Error&) {
        // keep the circle fit
      }
    }
    if (fit.center.norm() > lateral_limit) return;

    Vec3 u, v;
    plane_basis(tangent, u, v);
    updated[idx] = pos + fit.center.x * u + fit.center.y * v;
  });

  for (std::size_t idx = 0; idx < graph.nodes.size(); ++idx) {
    graph.nodes[idx].position = updated[idx];
  }
  return graph;
}

// Convenience overload: builds its own acceleration grid and derives the
// lateral retention radius from the voxel diagonal.
inline SkeletonGraph recenter_nodes(SkeletonGraph graph,
                                    const PointCloud& cloud, double thickness,
                                    double residual_switch) {
  const VoxelGrid grid = build_grid(cloud, 100);
  const double limit = 3.0 * grid.config.voxel_size.norm();
  return recenter_nodes(std::move(graph), cloud, grid, thickness,
                        residual_switch, limit);
}

// Synchronous Laplacian smoothing: each degree-2 node moves toward the mean
// of its two neighbors by factor lambda; chain ends and junctions stay
// fixed.
inline SkeletonGraph laplacian_smooth(SkeletonGraph graph, double lambda,
                                      int iterations) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw InvalidArgument("laplacian_smooth: lambda must be in [0, 1]");
  }
  if (iterations < 0) {
    throw InvalidArgument("laplacian_smooth: iterations must be >= 0");
  }
  const auto adj = adjacency_lists(graph);
  std::vector<Vec3> current(graph.nodes.size());
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    current[i] = graph.nodes[i].position;
  }
  std::vector<Vec3> next(current.size());
  for (int iter = 0; iter < iterations; ++iter) {
    parallel_for(current.size(), [&](std::size_t i) {
      if (adj[i].size() != 2) {
        next[i] = current[i];
        return;
      }
      const Vec3 mean = (current[adj[i][0]] + current[adj[i][1]]) / 2.0;
      next[i] = (1.0 - lambda) * current[i] + lambda * mean;
    });
    std::swap(current, next);
  }
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    graph.nodes[i].position = current[i];
  }
  return graph;
}

}  // namespace skeletree
