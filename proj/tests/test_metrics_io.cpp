// SPDX-License-Identifier: Apache-2.0
// Runtime metrics, report emission, and cloud/skeleton file round trips.

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "skeletree/errors.hpp"
#include "skeletree/io.hpp"
#include "skeletree/metrics.hpp"
#include "skeletree/skeleton_graph.hpp"
#include "support/oracles.hpp"

namespace sk = skeletree;
namespace ts = testsupport;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

sk::RunReport report(std::string tree, std::string algo, std::size_t points,
                     std::size_t nodes, double runtime) {
  sk::RunReport r;
  r.tree_id = std::move(tree);
  r.algorithm = std::move(algo);
  r.point_count = points;
  r.node_count = nodes;
  r.runtime_s = runtime;
  r.tpmp_s = sk::compute_tpmp(runtime, points);
  return r;
}

}  // namespace

TEST(Tpmp, ScalesRuntimeToAMillionPoints) {
  EXPECT_DOUBLE_EQ(sk::compute_tpmp(1.0, 1000000), 1.0);
  EXPECT_DOUBLE_EQ(sk::compute_tpmp(0.5, 250000), 2.0);
  // Published-scale sanity rows: runtime, cloud size, one-decimal figure.
  EXPECT_DOUBLE_EQ(sk::round_to_tenth(sk::compute_tpmp(1.3, 876657)), 1.5);
  EXPECT_DOUBLE_EQ(sk::round_to_tenth(sk::compute_tpmp(6.0, 3398859)), 1.8);
  EXPECT_DOUBLE_EQ(sk::round_to_tenth(sk::compute_tpmp(13.0, 4925230)), 2.6);
}

TEST(Tpmp, RejectsBadInputs) {
  EXPECT_THROW(sk::compute_tpmp(1.0, 0), sk::InvalidCount);
  EXPECT_THROW(sk::compute_tpmp(-0.1, 100), sk::InvalidCount);
}

TEST(Tpmp, RoundsHalfAwayFromZero) {
  EXPECT_DOUBLE_EQ(sk::round_to_tenth(0.25), 0.3);
  EXPECT_DOUBLE_EQ(sk::round_to_tenth(-0.25), -0.3);
  EXPECT_DOUBLE_EQ(sk::round_to_tenth(1.84), 1.8);
  EXPECT_DOUBLE_EQ(sk::round_to_tenth(1.85), 1.9);
  EXPECT_DOUBLE_EQ(sk::round_to_tenth(2.0), 2.0);
}

TEST(StageTimer, RecordsNamedLapsInOrder) {
  sk::StageTimer timer;
  timer.lap("first");
  timer.lap("second");
  ASSERT_EQ(timer.laps().size(), 2u);
  EXPECT_EQ(timer.laps()[0].first, "first");
  EXPECT_EQ(timer.laps()[1].first, "second");
  EXPECT_GE(timer.laps()[0].second, 0.0);
  EXPECT_GE(timer.laps()[1].second, 0.0);
  EXPECT_GE(timer.total(),
            timer.laps()[0].second + timer.laps()[1].second - 1e-6);
}

TEST(EmitReport, CsvPairsAlgorithmsByTree) {
  ts::TempDir dir;
  const std::vector<sk::RunReport> reports = {
      report("a", "ftsem", 1000000, 500, 1.3),
      report("a", "gsa", 1000000, 700, 6.0),
      report("b", "ftsem", 2000000, 900, 5.0),
  };
  const std::string path = dir.file("table.csv");
  sk::emit_report(reports, path, sk::ReportFormat::csv);
  const std::string expected =
      "tree_id,point_count,node_count_ftsem,node_count_gsa,"
      "runtime_ftsem,runtime_gsa,tpmp_ftsem,tpmp_gsa\n"
      "a,1000000,500,700,1.300,6.000,1.3,6.0\n"
      "b,2000000,900,,5.000,,2.5,\n"
      "average_tpmp,,,,,,1.9,6.0\n";
  EXPECT_EQ(read_file(path), expected);
}

TEST(EmitReport, FooterAveragesPerAlgorithm) {
  ts::TempDir dir;
  // Two same-algorithm runs with per-tree figures 1.0 and 3.0 average to 2.0.
  const std::vector<sk::RunReport> reports = {
      report("x", "ftsem", 1000000, 10, 1.0),
      report("y", "ftsem", 1000000, 10, 3.0),
  };
  const std::string path = dir.file("avg.csv");
  sk::emit_report(reports, path, sk::ReportFormat::csv);
  const std::string text = read_file(path);
  EXPECT_NE(text.find("average_tpmp,,,,,,2.0,\n"), std::string::npos) << text;
}

TEST(EmitReport, JsonKeepsFullPrecision) {
  ts::TempDir dir;
  auto r1 = report("t", "ftsem", 2000000, 42, 2.3);
  r1.stage_timings = {{"filter", 0.5}, {"thin", 1.1}};
  r1.residual_branch_count = 3;
  const auto r2 = report("t", "gsa", 2000000, 77, 9.0);
  const std::vector<sk::RunReport> reports = {r1, r2};
  const std::string path = dir.file("report.json");
  sk::emit_report(reports, path, sk::ReportFormat::json);

  const auto doc = nlohmann::json::parse(read_file(path));
  ASSERT_EQ(doc.at("reports").size(), 2u);
  const auto& jr = doc.at("reports")[0];
  EXPECT_EQ(jr.at("tree_id"), "t");
  EXPECT_EQ(jr.at("algorithm"), "ftsem");
  EXPECT_EQ(jr.at("point_count"), 2000000);
  EXPECT_EQ(jr.at("node_count"), 42);
  EXPECT_NEAR(jr.at("runtime_s").get<double>(), 2.3, 1e-12);
  EXPECT_NEAR(jr.at("tpmp_s").get<double>(), 1.15, 1e-12);
  EXPECT_NEAR(jr.at("stage_timings").at("thin").get<double>(), 1.1, 1e-12);
  EXPECT_EQ(jr.at("residual_branch_count"), 3);
  EXPECT_NEAR(doc.at("average_tpmp").at("ftsem").get<double>(), 1.15, 1e-9);
  EXPECT_NEAR(doc.at("average_tpmp").at("gsa").get<double>(), 4.5, 1e-9);
}

TEST(EmitReport, EmptyInputRejected) {
  ts::TempDir dir;
  const std::vector<sk::RunReport> none;
  EXPECT_THROW(
      sk::emit_report(none, dir.file("x.csv"), sk::ReportFormat::csv),
      sk::EmptyInput);
}

TEST(CloudIo, XyzRoundTripKeepsSixDecimals) {
  ts::TempDir dir;
  sk::PointCloud cloud;
  cloud.has_intensity = true;
  cloud.points.push_back({1.2345678, -2.3456789, 3.4567891, 100.5});
  cloud.points.push_back({-0.000001, 0.0, 99.999999, 0.25});
  const std::string path = dir.file("cloud.xyz");
  sk::export_cloud(cloud, path, sk::CloudExportFormat::xyz_text);
  const sk::PointCloud back = sk::load_cloud(path);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_TRUE(back.has_intensity);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_NEAR(back.points[i].x, cloud.points[i].x, 5e-7);
    EXPECT_NEAR(back.points[i].y, cloud.points[i].y, 5e-7);
    EXPECT_NEAR(back.points[i].z, cloud.points[i].z, 5e-7);
    EXPECT_NEAR(*back.points[i].intensity, *cloud.points[i].intensity, 5e-7);
  }
}

TEST(CloudIo, AsciiPlyRoundTripIsBitExact) {
  ts::TempDir dir;
  sk::PointCloud cloud;
  cloud.has_intensity = true;
  cloud.points.push_back({1.0 / 3.0, std::sqrt(2.0), -17.123456789012345,
                          0.1 + 0.2});
  cloud.points.push_back({1e-300, -1e300, 6.02214076e23, 2.718281828459045});
  const std::string path = dir.file("cloud.ply");
  sk::export_cloud(cloud, path, sk::CloudExportFormat::ply_ascii);
  const sk::PointCloud back = sk::load_cloud(path);
  ASSERT_EQ(back.size(), 2u);
  ASSERT_TRUE(back.has_intensity);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back.points[i].x, cloud.points[i].x);
    EXPECT_EQ(back.points[i].y, cloud.points[i].y);
    EXPECT_EQ(back.points[i].z, cloud.points[i].z);
    EXPECT_EQ(*back.points[i].intensity, *cloud.points[i].intensity);
  }
}

TEST(CloudIo, BinaryPlyRoundTripIsBitExact) {
  ts::TempDir dir;
  sk::PointCloud cloud;
  cloud.points.push_back({1.0 / 3.0, std::sqrt(2.0), -17.123456789012345, {}});
  cloud.points.push_back({1e-300, -1e300, 0.0, {}});
  const std::string path = dir.file("cloud.bply");
  sk::export_cloud(cloud, path, sk::CloudExportFormat::ply_binary);
  const sk::PointCloud back =
      sk::load_cloud(path, sk::CloudFormat::ply);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_FALSE(back.has_intensity);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back.points[i].x, cloud.points[i].x);
    EXPECT_EQ(back.points[i].y, cloud.points[i].y);
    EXPECT_EQ(back.points[i].z, cloud.points[i].z);
  }
}

TEST(CloudIo, AutoDetectSniffsPlyMagicWithoutExtension) {
  ts::TempDir dir;
  sk::PointCloud cloud;
  cloud.points.push_back({1, 2, 3, {}});
  cloud.points.push_back({4, 5, 6, {}});
  const std::string path = dir.file("noext.dat");
  sk::export_cloud(cloud, path, sk::CloudExportFormat::ply_ascii);
  const sk::PointCloud back = sk::load_cloud(path);  // magic bytes decide
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.points[1].z, 6.0);
}

TEST(CloudIo, ThreeColumnTextHasNoIntensity) {
  ts::TempDir dir;
  const std::string path = dir.file("plain.xyz");
  write_file(path, "0 0 0\n1.5 2.5 3.5\n");
  const sk::PointCloud cloud = sk::load_cloud(path);
  ASSERT_EQ(cloud.size(), 2u);
  EXPECT_FALSE(cloud.has_intensity);
  EXPECT_FALSE(cloud.points[0].intensity.has_value());
}

TEST(CloudIo, MixedIntensityColumnsDisableIntensity) {
  ts::TempDir dir;
  const std::string path = dir.file("mixed.xyz");
  write_file(path, "0 0 0 9.5\n1 1 1\n");
  const sk::PointCloud cloud = sk::load_cloud(path);
  ASSERT_EQ(cloud.size(), 2u);
  EXPECT_FALSE(cloud.has_intensity);
}

TEST(CloudIo, StrictModeReportsLineNumbers) {
  ts::TempDir dir;
  const std::string path = dir.file("broken.xyz");
  write_file(path, "# header\n1 2 3\nnot a point\n4 5 6\n");
  try {
    sk::load_cloud(path);
    FAIL() << "expected ParseError";
  } catch (const sk::ParseError& e) {
    EXPECT_EQ(e.line, 3u);
  }
}

TEST(CloudIo, TolerantStatsBalanceExactly) {
  ts::TempDir dir;
  const std::string path = dir.file("messy.xyz");
  write_file(path,
             "# comment\n"
             "\n"
             "1 2 3 4\n"
             "bad line\n"
             "4 5 6 7\n"
             "5 6\n"
             "   # indented comment\n"
             "7 8 9 10\n");
  sk::LoadStats stats;
  const sk::PointCloud cloud =
      sk::load_cloud(path, sk::CloudFormat::auto_detect, &stats);
  EXPECT_EQ(cloud.size(), 3u);
  EXPECT_EQ(stats.total_lines, 8u);
  EXPECT_EQ(stats.comment_lines, 3u);
  EXPECT_EQ(stats.bad_lines, 2u);
  EXPECT_EQ(stats.parsed_points, 3u);
  // Invariant: every non-comment line is either parsed or counted bad.
  EXPECT_EQ(stats.parsed_points + stats.bad_lines,
            stats.total_lines - stats.comment_lines);
}

TEST(CloudIo, MissingAndEmptyFiles) {
  ts::TempDir dir;
  EXPECT_THROW(sk::load_cloud(dir.file("nope.xyz")), sk::FileNotFound);
  const std::string path = dir.file("empty.xyz");
  write_file(path, "# nothing here\n");
  EXPECT_THROW(sk::load_cloud(path), sk::EmptyCloud);
}

TEST(SkeletonIo, JsonRoundTripPreservesEverything) {
  ts::TempDir dir;
  auto graph = ts::make_chain(
      {{0.1, 0.2, 0.3}, {1.0 / 3.0, -2.5, 7.75}, {4, 4, 4}});
  graph.branch_labels = {0, 0, 0};
  const std::string path = dir.file("skel.json");
  sk::export_skeleton(graph, path, sk::SkeletonFormat::json);
  const sk::SkeletonGraph back = sk::import_skeleton_json(path);
  ASSERT_EQ(back.nodes.size(), graph.nodes.size());
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    EXPECT_EQ(back.nodes[i].position, graph.nodes[i].position);
  }
  EXPECT_EQ(back.edges, graph.edges);
  EXPECT_EQ(back.branch_labels, graph.branch_labels);
}

TEST(SkeletonIo, ObjUsesOneBasedIndices) {
  ts::TempDir dir;
  const auto graph = ts::make_chain({{0, 0, 0}, {1, 0, 0}, {1, 1, 0}});
  const std::string path = dir.file("skel.obj");
  sk::export_skeleton(graph, path, sk::SkeletonFormat::obj_lines);
  const std::string text = read_file(path);
  std::istringstream in(text);
  std::string line;
  std::size_t v_count = 0;
  std::vector<std::string> l_lines;
  while (std::getline(in, line)) {
    if (line.rfind("v ", 0) == 0) ++v_count;
    if (line.rfind("l ", 0) == 0) l_lines.push_back(line);
  }
  EXPECT_EQ(v_count, 3u);
  ASSERT_EQ(l_lines.size(), 2u);
  EXPECT_EQ(l_lines[0], "l 1 2");
  EXPECT_EQ(l_lines[1], "l 2 3");
}

TEST(SkeletonIo, PlyEdgesDeclaresBothElements) {
  ts::TempDir dir;
  const auto graph = ts::make_chain({{0, 0, 0}, {0, 0, 1}});
  const std::string path = dir.file("skel.ply");
  sk::export_skeleton(graph, path, sk::SkeletonFormat::ply_edges);
  const std::string text = read_file(path);
  EXPECT_NE(text.find("element vertex 2"), std::string::npos);
  EXPECT_NE(text.find("element edge 1"), std::string::npos);
  EXPECT_NE(text.find("\n0 1\n"), std::string::npos);
}

TEST(SkeletonIo, ImportRejectsMalformedDocuments) {
  ts::TempDir dir;
  const std::string path = dir.file("bad.json");
  write_file(path, "{\"edges\": []}");
  EXPECT_THROW(sk::import_skeleton_json(path), sk::ParseError);
  write_file(path, "{\"nodes\": [[0, 0]]}");
  EXPECT_THROW(sk::import_skeleton_json(path), sk::ParseError);
  write_file(path, "{\"nodes\": [[0,0,0],[1,1,1]], \"edges\": [[0, 5]]}");
  EXPECT_THROW(sk::import_skeleton_json(path), sk::ParseError);
  write_file(path, "{\"nodes\": [[0,0,0],[1,1,1]], \"edges\": [[1, 1]]}");
  EXPECT_THROW(sk::import_skeleton_json(path), sk::ParseError);
  write_file(path, "not json at all");
  EXPECT_THROW(sk::import_skeleton_json(path), sk::ParseError);
  EXPECT_THROW(sk::import_skeleton_json(dir.file("absent.json")),
               sk::FileNotFound);
}

TEST(SkeletonIo, EmptyGraphRejected) {
  ts::TempDir dir;
  const sk::SkeletonGraph empty;
  EXPECT_THROW(
      sk::export_skeleton(empty, dir.file("x.json"), sk::SkeletonFormat::json),
      sk::EmptyInput);
}
