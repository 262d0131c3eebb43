// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "skeletree/errors.hpp"
#include "skeletree/point_cloud.hpp"
#include "skeletree/skeleton_graph.hpp"

namespace skeletree {

enum class CloudFormat { auto_detect, xyz_text, ply };
enum class CloudExportFormat { xyz_text, ply_ascii, ply_binary };
enum class SkeletonFormat { obj_lines, ply_edges, json };

// Filled when the caller opts into tolerant parsing: malformed records are
// counted instead of aborting the load. parsed_points + bad_lines equals the
// number of non-comment lines for xyz input.
struct LoadStats {
  std::size_t total_lines = 0;
  std::size_t comment_lines = 0;  // includes blank lines
  std::size_t bad_lines = 0;
  std::size_t parsed_points = 0;
};

namespace detail {

inline bool parse_xyz_line(const char* s, Point3I& p, bool& has_intensity) {
  char* end = nullptr;
  const double x = std::strtod(s, &end);
  if (end == s) return false;
  s = end;
  const double y = std::strtod(s, &end);
  if (end == s) return false;
  s = end;
  const double z = std::strtod(s, &end);
  if (end == s) return false;
  s = end;
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z)) {
    return false;
  }
  p.x = x;
  p.y = y;
  p.z = z;
  p.intensity.reset();
  has_intensity = false;
  while (*s == ' ' || *s == '\t' || *s == '\r') ++s;
  if (*s == '\0') return true;  // three columns only
  const double intensity = std::strtod(s, &end);
  if (end == s || !std::isfinite(intensity)) return false;
  p.intensity = intensity;
  has_intensity = true;
  return true;  // columns beyond the fourth are ignored
}

inline PointCloud load_xyz(const std::string& path, LoadStats* stats) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFound("load_cloud: " + path);
  PointCloud cloud;
  cloud.source_path = path;
  LoadStats local;
  std::string line;
  std::size_t line_no = 0;
  std::size_t with_intensity = 0;
  while (std::getline(in, line)) {
    ++line_no;
    ++local.total_lines;
    std::size_t first = 0;
    while (first < line.size() &&
           std::isspace(static_cast<unsigned char>(line[first]))) {
      ++first;
    }
    if (first == line.size() || line[first] == '#') {
      ++local.comment_lines;
      continue;
    }
    Point3I p;
    bool has_i = false;
    if (!parse_xyz_line(line.c_str() + first, p, has_i)) {
      if (stats == nullptr) {
        throw ParseError("load_cloud: malformed record", line_no);
      }
      ++local.bad_lines;
      continue;
    }
    cloud.points.push_back(p);
    if (has_i) ++with_intensity;
  }
  local.parsed_points = cloud.points.size();
  if (stats != nullptr) *stats = local;
  if (cloud.points.empty()) throw EmptyCloud("load_cloud: no points in " + path);
  cloud.has_intensity = with_intensity == cloud.points.size();
  return cloud;
}

struct PlyProperty {
  std::string name;
  int size = 0;        // bytes; 0 for list properties
  bool is_float = false;
  bool is_signed = false;
  bool is_list = false;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

inline int ply_type_size(const std::string& t, bool& is_float,
                         bool& is_signed) {
  is_float = false;
  is_signed = false;
  if (t == "float" || t == "float32") {
    is_float = true;
    return 4;
  }
  if (t == "double" || t == "float64") {
    is_float = true;
    return 8;
  }
  if (t == "char" || t == "int8") {
    is_signed = true;
    return 1;
  }
  if (t == "uchar" || t == "uint8") return 1;
  if (t == "short" || t == "int16") {
    is_signed = true;
    return 2;
  }
  if (t == "ushort" || t == "uint16") return 2;
  if (t == "int" || t == "int32") {
    is_signed = true;
    return 4;
  }
  if (t == "uint" || t == "uint32") return 4;
  return 0;
}

inline double decode_scalar(const unsigned char* bytes,
                            const PlyProperty& prop) {
  if (prop.is_float) {
    if (prop.size == 4) {
      float f;
      std::memcpy(&f, bytes, 4);
      return f;
    }
    double d;
    std::memcpy(&d, bytes, 8);
    return d;
  }
  std::uint64_t raw = 0;
  for (int b = prop.size - 1; b >= 0; --b) raw = (raw << 8) | bytes[b];
  if (prop.is_signed) {
    const int bits = prop.size * 8;
    const std::uint64_t sign = std::uint64_t{1} << (bits - 1);
    if (raw & sign) {
      return static_cast<double>(
          static_cast<std::int64_t>(raw | (~std::uint64_t{0} << bits)));
    }
  }
  return static_cast<double>(raw);
}

inline PointCloud load_ply(const std::string& path, LoadStats* stats) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFound("load_cloud: " + path);

  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() {
    if (!std::getline(in, line)) {
      throw ParseError("load_cloud: truncated ply header", line_no);
    }
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) {
      line.pop_back();
    }
  };
  next_line();
  if (line != "ply") throw ParseError("load_cloud: missing ply magic", line_no);

  bool binary = false;
  std::vector<PlyElement> elements;
  for (;;) {
    next_line();
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    if (word == "end_header") break;
    if (word == "comment" || word == "obj_info" || word.empty()) continue;
    if (word == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt == "ascii") {
        binary = false;
      } else if (fmt == "binary_little_endian") {
        binary = true;
      } else {
        throw ParseError("load_cloud: unsupported ply format " + fmt, line_no);
      }
    } else if (word == "element") {
      PlyElement el;
      ss >> el.name >> el.count;
      if (ss.fail()) throw ParseError("load_cloud: bad element line", line_no);
      elements.push_back(el);
    } else if (word == "property") {
      if (elements.empty()) {
        throw ParseError("load_cloud: property before element", line_no);
      }
      std::string type;
      ss >> type;
      PlyProperty prop;
      if (type == "list") {
        std::string count_type, item_type;
        ss >> count_type >> item_type >> prop.name;
        prop.is_list = true;
      } else {
        prop.size = ply_type_size(type, prop.is_float, prop.is_signed);
        if (prop.size == 0) {
          throw ParseError("load_cloud: unknown property type " + type,
                           line_no);
        }
        ss >> prop.name;
      }
      if (ss.fail()) throw ParseError("load_cloud: bad property line", line_no);
      elements.back().properties.push_back(prop);
    } else {
      throw ParseError("load_cloud: unknown header keyword " + word, line_no);
    }
  }

  const auto vertex_it =
      std::find_if(elements.begin(), elements.end(),
                   [](const PlyElement& e) { return e.name == "vertex"; });
  if (vertex_it == elements.end()) {
    throw ParseError("load_cloud: ply without vertex element", line_no);
  }
  const PlyElement& vertex = *vertex_it;
  int col_x = -1, col_y = -1, col_z = -1, col_i = -1;
  for (std::size_t c = 0; c < vertex.properties.size(); ++c) {
    const auto& name = vertex.properties[c].name;
    if (vertex.properties[c].is_list) continue;
    if (name == "x") col_x = static_cast<int>(c);
    if (name == "y") col_y = static_cast<int>(c);
    if (name == "z") col_z = static_cast<int>(c);
    if (name == "intensity" || name == "scalar_intensity") {
      col_i = static_cast<int>(c);
    }
  }
  if (col_x < 0 || col_y < 0 || col_z < 0) {
    throw ParseError("load_cloud: vertex element lacks x/y/z", line_no);
  }

  PointCloud cloud;
  cloud.source_path = path;
  LoadStats local;
  local.total_lines = line_no;

  if (!binary) {
    for (const auto& el : elements) {
      if (el.name == "vertex") break;
      for (std::size_t r = 0; r < el.count; ++r) next_line();  // skip rows
    }
    for (std::size_t r = 0; r < vertex.count; ++r) {
      if (!std::getline(in, line)) {
        throw ParseError("load_cloud: truncated vertex data", line_no);
      }
      ++line_no;
      const char* s = line.c_str();
      char* end = nullptr;
      std::vector<double> values;
      values.reserve(vertex.properties.size());
      bool ok = true;
      for (std::size_t c = 0; c < vertex.properties.size(); ++c) {
        const double v = std::strtod(s, &end);
        if (end == s) {
          ok = false;
          break;
        }
        values.push_back(v);
        s = end;
      }
      if (!ok || !std::isfinite(values[col_x]) ||
          !std::isfinite(values[col_y]) || !std::isfinite(values[col_z])) {
        if (stats == nullptr) {
          throw ParseError("load_cloud: malformed vertex record", line_no);
        }
        ++local.bad_lines;
        continue;
      }
      Point3I p{values[col_x], values[col_y], values[col_z], std::nullopt};
      if (col_i >= 0) p.intensity = values[col_i];
      cloud.points.push_back(p);
    }
  } else {
    std::size_t record_size = 0;
    for (const auto& prop : vertex.properties) {
      if (prop.is_list) {
        throw ParseError("load_cloud: list property in binary vertex",
                         line_no);
      }
      record_size += static_cast<std::size_t>(prop.size);
    }
    for (const auto& el : elements) {
      if (el.name == "vertex") break;
      std::size_t skip = 0;
      for (const auto& prop : el.properties) {
        if (prop.is_list) {
          throw ParseError(
              "load_cloud: cannot skip binary list element before vertex",
              line_no);
        }
        skip += static_cast<std::size_t>(prop.size);
      }
      in.ignore(static_cast<std::streamsize>(skip * el.count));
    }
    std::vector<unsigned char> record(record_size);
    for (std::size_t r = 0; r < vertex.count; ++r) {
      in.read(reinterpret_cast<char*>(record.data()),
              static_cast<std::streamsize>(record_size));
      if (in.gcount() != static_cast<std::streamsize>(record_size)) {
        throw ParseError("load_cloud: truncated binary vertex data", r);
      }
      Point3I p;
      std::size_t off = 0;
      for (std::size_t c = 0; c < vertex.properties.size(); ++c) {
        const auto& prop = vertex.properties[c];
        const double v = decode_scalar(record.data() + off, prop);
        off += static_cast<std::size_t>(prop.size);
        if (static_cast<int>(c) == col_x) p.x = v;
        if (static_cast<int>(c) == col_y) p.y = v;
        if (static_cast<int>(c) == col_z) p.z = v;
        if (static_cast<int>(c) == col_i) p.intensity = v;
      }
      if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
        if (stats == nullptr) {
          throw ParseError("load_cloud: non-finite binary vertex", r);
        }
        ++local.bad_lines;
        continue;
      }
      cloud.points.push_back(p);
    }
  }

  local.parsed_points = cloud.points.size();
  if (stats != nullptr) *stats = local;
  if (cloud.points.empty()) throw EmptyCloud("load_cloud: no points in " + path);
  cloud.has_intensity =
      col_i >= 0 && std::all_of(cloud.points.begin(), cloud.points.end(),
                                [](const Point3I& p) {
                                  return p.intensity.has_value();
                                });
  return cloud;
}

inline bool has_ply_magic(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  char magic[3] = {};
  in.read(magic, 3);
  return in.gcount() == 3 && magic[0] == 'p' && magic[1] == 'l' &&
         magic[2] == 'y';
}

}  // namespace detail

// Loads a point cloud. auto_detect sniffs the ".ply" extension, then the
// "ply" magic bytes, and falls back to xyz text. With a LoadStats pointer
// the text parsers skip and count malformed records instead of throwing.
inline PointCloud load_cloud(const std::string& path,
                             CloudFormat format = CloudFormat::auto_detect,
                             LoadStats* stats = nullptr) {
  if (!std::filesystem::exists(path)) {
    throw FileNotFound("load_cloud: " + path);
  }
  if (format == CloudFormat::auto_detect) {
    std::string ext = std::filesystem::path(path).extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    format = (ext == ".ply" || detail::has_ply_magic(path))
                 ? CloudFormat::ply
                 : CloudFormat::xyz_text;
  }
  return format == CloudFormat::ply ? detail::load_ply(path, stats)
                                    : detail::load_xyz(path, stats);
}

// Writes a cloud. Text formats carry 6 decimals in xyz (sub-millimeter at
// meter scale) and 17 significant digits in ascii ply (bit-exact reload);
// binary ply stores raw little-endian doubles.
inline void export_cloud(const PointCloud& cloud, const std::string& path,
                         CloudExportFormat format) {
  if (cloud.empty()) throw EmptyInput("export_cloud: empty cloud");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("export_cloud: cannot open " + path);
  const bool intensity = cloud.has_intensity;
  char buf[160];

  if (format == CloudExportFormat::xyz_text) {
    for (const auto& p : cloud.points) {
      int len;
      if (intensity) {
        len = std::snprintf(buf, sizeof buf, "%.6f %.6f %.6f %.6f\n", p.x,
                            p.y, p.z, *p.intensity);
      } else {
        len = std::snprintf(buf, sizeof buf, "%.6f %.6f %.6f\n", p.x, p.y,
                            p.z);
      }
      out.write(buf, len);
    }
  } else {
    out << "ply\n";
    out << (format == CloudExportFormat::ply_ascii
                ? "format ascii 1.0\n"
                : "format binary_little_endian 1.0\n");
    out << "element vertex " << cloud.size() << "\n";
    out << "property double x\nproperty double y\nproperty double z\n";
    if (intensity) out << "property double intensity\n";
    out << "end_header\n";
    if (format == CloudExportFormat::ply_ascii) {
      for (const auto& p : cloud.points) {
        int len;
        if (intensity) {
          len = std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %.17g\n",
                              p.x, p.y, p.z, *p.intensity);
        } else {
          len = std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", p.x,
                              p.y, p.z);
        }
        out.write(buf, len);
      }
    } else {
      for (const auto& p : cloud.points) {
        double record[4] = {p.x, p.y, p.z, intensity ? *p.intensity : 0.0};
        out.write(reinterpret_cast<const char*>(record),
                  intensity ? 32 : 24);
      }
    }
  }
  if (!out) throw IoError("export_cloud: write failed for " + path);
}

// Writes a skeleton graph. obj: "v" vertices and "l" polyline edges
// (1-based); ply: vertex + edge elements; json: 0-based nodes, edges, and
// per-node branch labels.
inline void export_skeleton(const SkeletonGraph& graph, const std::string& path,
                            SkeletonFormat format) {
  if (graph.nodes.empty()) throw EmptyInput("export_skeleton: empty graph");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("export_skeleton: cannot open " + path);
  char buf[160];

  if (format == SkeletonFormat::obj_lines) {
    for (const auto& node : graph.nodes) {
      const int len =
          std::snprintf(buf, sizeof buf, "v %.6f %.6f %.6f\n",
                        node.position.x, node.position.y, node.position.z);
      out.write(buf, len);
    }
    for (const auto& [u, v] : graph.edges) {
      out << "l " << (u + 1) << ' ' << (v + 1) << '\n';
    }
  } else if (format == SkeletonFormat::ply_edges) {
    out << "ply\nformat ascii 1.0\n";
    out << "element vertex " << graph.nodes.size() << "\n";
    out << "property double x\nproperty double y\nproperty double z\n";
    out << "element edge " << graph.edges.size() << "\n";
    out << "property int vertex1\nproperty int vertex2\n";
    out << "end_header\n";
    for (const auto& node : graph.nodes) {
      const int len =
          std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n",
                        node.position.x, node.position.y, node.position.z);
      out.write(buf, len);
    }
    for (const auto& [u, v] : graph.edges) {
      out << u << ' ' << v << '\n';
    }
  } else {
    nlohmann::ordered_json doc;
    doc["nodes"] = nlohmann::ordered_json::array();
    for (const auto& node : graph.nodes) {
      doc["nodes"].push_back(
          {node.position.x, node.position.y, node.position.z});
    }
    doc["edges"] = nlohmann::ordered_json::array();
    for (const auto& [u, v] : graph.edges) {
      doc["edges"].push_back({u, v});
    }
    doc["branches"] = graph.branch_labels;
    out << doc.dump(2) << '\n';
  }
  if (!out) throw IoError("export_skeleton: write failed for " + path);
}

// Reads a skeleton written by the json exporter. Voxel indices and source
// point counts are not part of the exchange format; imported nodes carry
// placeholders.
inline SkeletonGraph import_skeleton_json(const std::string& path) {
  if (!std::filesystem::exists(path)) {
    throw FileNotFound("import_skeleton_json: " + path);
  }
  std::ifstream in(path, std::ios::binary);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("import_skeleton_json: ") + e.what(), 0);
  }
  if (!doc.contains("nodes") || !doc["nodes"].is_array()) {
    throw ParseError("import_skeleton_json: missing nodes array", 0);
  }
  SkeletonGraph graph;
  for (const auto& jn : doc["nodes"]) {
    if (!jn.is_array() || jn.size() != 3) {
      throw ParseError("import_skeleton_json: node is not [x, y, z]", 0);
    }
    SkeletonNode node;
    node.position = {jn[0].get<double>(), jn[1].get<double>(),
                     jn[2].get<double>()};
    node.voxel = {0, 0, 0};
    node.source_point_count = 1;
    graph.nodes.push_back(node);
  }
  const auto node_count = graph.nodes.size();
  if (doc.contains("edges")) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    for (const auto& je : doc["edges"]) {
      if (!je.is_array() || je.size() != 2) {
        throw ParseError("import_skeleton_json: edge is not [i, j]", 0);
      }
      const auto u = je[0].get<std::uint64_t>();
      const auto v = je[1].get<std::uint64_t>();
      if (u >= node_count || v >= node_count || u == v) {
        throw ParseError("import_skeleton_json: edge index out of range", 0);
      }
      edges.emplace_back(std::min<std::uint32_t>(u, v),
                         std::max<std::uint32_t>(u, v));
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    graph.edges = std::move(edges);
  }
  if (doc.contains("branches") && doc["branches"].is_array() &&
      doc["branches"].size() == node_count) {
    graph.branch_labels = doc["branches"].get<std::vector<int>>();
  } else {
    relabel_components(graph);
  }
  return graph;
}

}  // namespace skeletree
