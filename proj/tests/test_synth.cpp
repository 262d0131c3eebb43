// SPDX-License-Identifier: Apache-2.0
// Synthetic tree generation: determinism, geometry envelopes, gap windows,
// ground-truth consistency, and the accuracy metric against known truth.

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "skeletree/errors.hpp"
#include "skeletree/synth_tree.hpp"
#include "support/oracles.hpp"

namespace sk = skeletree;
namespace ts = testsupport;

namespace {

sk::TreeSpec small_spec() {
  sk::TreeSpec spec;
  spec.depth = 2;
  spec.trunk_height = 10.0;
  spec.trunk_radius = 0.3;
  spec.points_per_m2 = 1500.0;
  spec.seed = 11;
  return spec;
}

bool same_point(const sk::Point3I& a, const sk::Point3I& b) {
  return a.x == b.x && a.y == b.y && a.z == b.z && a.intensity == b.intensity;
}

}  // namespace

TEST(Generate, DeterministicForFixedSpec) {
  const auto spec = small_spec();
  const auto [cloud_a, truth_a] = sk::generate(spec);
  const auto [cloud_b, truth_b] = sk::generate(spec);
  ASSERT_EQ(cloud_a.size(), cloud_b.size());
  for (std::size_t i = 0; i < cloud_a.size(); ++i) {
    ASSERT_TRUE(same_point(cloud_a.points[i], cloud_b.points[i])) << i;
  }
  ASSERT_EQ(truth_a.labels, truth_b.labels);
  ASSERT_EQ(truth_a.centerlines.size(), truth_b.centerlines.size());
}

TEST(Generate, SeedChangesTheCloud) {
  auto spec = small_spec();
  const auto [cloud_a, truth_a] = sk::generate(spec);
  spec.seed = 12;
  const auto [cloud_b, truth_b] = sk::generate(spec);
  bool all_same = cloud_a.size() == cloud_b.size();
  if (all_same) {
    for (std::size_t i = 0; i < cloud_a.size(); ++i) {
      all_same = all_same && same_point(cloud_a.points[i], cloud_b.points[i]);
    }
  }
  EXPECT_FALSE(all_same);
}

TEST(Generate, BareTrunkStaysInsideRadialEnvelope) {
  sk::TreeSpec spec;
  spec.depth = 0;
  spec.trunk_height = 10.0;
  spec.trunk_radius = 0.3;
  spec.radius_decay = 0.6;
  spec.points_per_m2 = 2000.0;
  spec.seed = 3;
  const auto [cloud, truth] = sk::generate(spec);

  ASSERT_EQ(truth.centerlines.size(), 1u);
  EXPECT_TRUE(truth.leaf_regions.empty());
  ASSERT_GT(cloud.size(), 1000u);
  const double r0 = spec.trunk_radius;
  const double r1 = spec.trunk_radius * spec.radius_decay;
  for (const auto& p : cloud.points) {
    ASSERT_GE(p.z, 0.0);
    ASSERT_LT(p.z, spec.trunk_height);
    const double t = p.z / spec.trunk_height;
    const double r = r0 + (r1 - r0) * t;
    const double dist = std::hypot(p.x, p.y);
    ASSERT_LE(dist, 1.5 * r + 1e-9);
    ASSERT_GE(dist, 0.5 * r - 1e-9);
  }
  for (const auto l : truth.labels) EXPECT_EQ(l, sk::ClassLabel::wood);
}

TEST(Generate, CenterlinesAreStraightWithTaperingRadii) {
  const auto [cloud, truth] = sk::generate(small_spec());
  // depth 2 with 2..3 children per level: at least 1 + 2 + 4 branches.
  EXPECT_GE(truth.centerlines.size(), 7u);
  for (const auto& line : truth.centerlines) {
    ASSERT_EQ(line.size(), 2u);
    EXPECT_GT(line.front().radius, 0.0);
    EXPECT_LE(line.back().radius, line.front().radius);
    EXPECT_GT((line.back().position - line.front().position).norm(), 0.0);
  }
  // Children start where their parent ends: every non-trunk start position
  // coincides with some other line's end position.
  for (std::size_t i = 1; i < truth.centerlines.size(); ++i) {
    const sk::Vec3 start = truth.centerlines[i].front().position;
    bool attached = false;
    for (std::size_t j = 0; j < truth.centerlines.size() && !attached; ++j) {
      if (j == i) continue;
      attached = (truth.centerlines[j].back().position - start).norm() < 1e-9;
    }
    EXPECT_TRUE(attached) << "branch " << i << " floats";
  }
}

TEST(Generate, LeafPointsLieInsideReportedRegions) {
  auto spec = small_spec();
  spec.leaf_fraction = 0.3;
  const auto [cloud, truth] = sk::generate(spec);
  ASSERT_EQ(truth.labels.size(), cloud.size());
  ASSERT_GE(truth.leaf_regions.size(), 4u);  // one per tip branch

  std::size_t leaves = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (truth.labels[i] != sk::ClassLabel::leaf) continue;
    ++leaves;
    const sk::Vec3 p = cloud.points[i].pos();
    const bool inside =
        std::any_of(truth.leaf_regions.begin(), truth.leaf_regions.end(),
                    [&](const sk::LeafRegion& r) { return r.contains(p); });
    ASSERT_TRUE(inside) << "leaf point " << i << " outside all regions";
  }
  const double rate =
      static_cast<double>(leaves) / static_cast<double>(cloud.size());
  EXPECT_NEAR(rate, 0.3, 0.01);
}

TEST(Generate, GapWindowEmitsNoPoints) {
  sk::TreeSpec spec;
  spec.depth = 0;
  spec.trunk_height = 20.0;
  spec.trunk_radius = 0.3;
  spec.points_per_m2 = 1000.0;
  spec.seed = 17;
  const auto [full, full_truth] = sk::generate(spec);

  spec.occlusion_gaps.push_back({{}, 0.4, 0.2});
  const auto [gapped, gapped_truth] = sk::generate(spec);

  EXPECT_LT(gapped.size(), full.size());
  for (const auto& p : gapped.points) {
    // Radial noise is perpendicular to the vertical trunk, so the deleted
    // parameter window maps exactly to z in [8, 12).
    EXPECT_FALSE(p.z >= 8.0 && p.z < 12.0) << "point at z=" << p.z;
  }
  // Same seed, draws made before the gap test: the gapped cloud is an exact
  // subsequence of the full cloud.
  std::size_t j = 0;
  for (const auto& p : gapped.points) {
    while (j < full.size() && !same_point(full.points[j], p)) ++j;
    ASSERT_LT(j, full.size()) << "gapped point missing from full stream";
    ++j;
  }
}

TEST(Generate, InvalidSpecsRejected) {
  const auto base = small_spec();
  {
    auto s = base;
    s.depth = -1;
    EXPECT_THROW(sk::generate(s), sk::InvalidSpec);
  }
  {
    auto s = base;
    s.trunk_height = 0;
    EXPECT_THROW(sk::generate(s), sk::InvalidSpec);
  }
  {
    auto s = base;
    s.radius_decay = 1.2;
    EXPECT_THROW(sk::generate(s), sk::InvalidSpec);
  }
  {
    auto s = base;
    s.leaf_fraction = 1.0;
    EXPECT_THROW(sk::generate(s), sk::InvalidSpec);
  }
  {
    auto s = base;
    s.points_per_m2 = 0;
    EXPECT_THROW(sk::generate(s), sk::InvalidSpec);
  }
  {
    auto s = base;
    s.branch_angle_range = {50.0, 30.0};
    EXPECT_THROW(sk::generate(s), sk::InvalidSpec);
  }
  {
    auto s = base;
    s.branch_angle_range = {30.0, 95.0};
    EXPECT_THROW(sk::generate(s), sk::InvalidSpec);
  }
  {
    auto s = base;
    s.occlusion_gaps.push_back({{}, 0.8, 0.3});  // start + length > 1
    EXPECT_THROW(sk::generate(s), sk::InvalidSpec);
  }
  {
    auto s = base;
    s.occlusion_gaps.push_back({{0, 0, 0}, 0.1, 0.1});  // deeper than tree
    EXPECT_THROW(sk::generate(s), sk::InvalidSpec);
  }
  {
    auto s = base;
    s.occlusion_gaps.push_back({{7}, 0.1, 0.1});  // no such child index
    EXPECT_THROW(sk::generate(s), sk::InvalidSpec);
  }
}

TEST(SkeletonAccuracy, NodesOnCenterlineScoresPerfect) {
  sk::GroundTruth truth;
  truth.centerlines.push_back({{{0, 0, 0}, 0.3}, {{0, 0, 2}, 0.2}});

  std::vector<sk::Vec3> positions;
  for (int i = 0; i <= 40; ++i) positions.push_back({0, 0, 0.05 * i});
  const auto graph = ts::make_chain(positions);

  const auto report = sk::skeleton_accuracy(graph, truth, 0.05);
  EXPECT_LE(report.mean_dist, 0.01);
  EXPECT_LE(report.hausdorff, 0.01);
  EXPECT_DOUBLE_EQ(report.completeness, 1.0);
}

TEST(SkeletonAccuracy, MissedBranchLowersCompleteness) {
  sk::GroundTruth truth;
  truth.centerlines.push_back({{{0, 0, 0}, 0.3}, {{0, 0, 2}, 0.2}});
  truth.centerlines.push_back({{{0, 0, 2}, 0.2}, {{2, 0, 2}, 0.1}});

  std::vector<sk::Vec3> positions;
  for (int i = 0; i <= 40; ++i) positions.push_back({0, 0, 0.05 * i});
  const auto graph = ts::make_chain(positions);

  const auto report = sk::skeleton_accuracy(graph, truth, 0.05);
  // Roughly half the qualifying centerline length is uncovered. The node
  // distances stay near zero: every extracted node sits on the first line.
  EXPECT_LT(report.completeness, 0.6);
  EXPECT_GT(report.completeness, 0.4);
  EXPECT_LE(report.mean_dist, 0.01);
}

TEST(SkeletonAccuracy, ShortBranchesDoNotCountAgainstCompleteness) {
  sk::GroundTruth truth;
  truth.centerlines.push_back({{{0, 0, 0}, 0.3}, {{0, 0, 2}, 0.2}});
  // 0.1 m stub < p_t x voxel_diagonal = 4 x 0.05: legitimately prunable.
  truth.centerlines.push_back({{{0, 0, 2}, 0.2}, {{0.1, 0, 2}, 0.1}});

  std::vector<sk::Vec3> positions;
  for (int i = 0; i <= 40; ++i) positions.push_back({0, 0, 0.05 * i});
  const auto graph = ts::make_chain(positions);

  const auto report = sk::skeleton_accuracy(graph, truth, 0.05);
  EXPECT_DOUBLE_EQ(report.completeness, 1.0);
}

TEST(SkeletonAccuracy, EmptyInputsRejected) {
  sk::GroundTruth truth;
  truth.centerlines.push_back({{{0, 0, 0}, 0.3}, {{0, 0, 2}, 0.2}});
  const sk::SkeletonGraph empty_graph;
  EXPECT_THROW(sk::skeleton_accuracy(empty_graph, truth, 0.05),
               sk::EmptyInput);

  const auto graph = ts::make_chain({{0, 0, 0}, {0, 0, 1}});
  const sk::GroundTruth empty_truth;
  EXPECT_THROW(sk::skeleton_accuracy(graph, empty_truth, 0.05),
               sk::EmptyInput);
}
