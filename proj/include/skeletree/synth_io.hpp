// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>

#include "skeletree/errors.hpp"
#include "skeletree/synth_tree.hpp"

namespace skeletree {

// Reads a TreeSpec from its JSON form. Absent fields keep their defaults;
// unknown fields are rejected so typos cannot silently change a corpus.
inline TreeSpec tree_spec_from_json(const nlohmann::json& doc) {
  static const char* known[] = {
      "depth",         "trunk_height",  "trunk_radius",
      "branch_angle_range", "radius_decay", "points_per_m2",
      "leaf_fraction", "occlusion_gaps", "seed"};
  for (const auto& [key, value] : doc.items()) {
    (void)value;
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw InvalidSpec("tree spec: unknown field \"" + key + "\"");
  }
  TreeSpec spec;
  if (doc.contains("depth")) spec.depth = doc["depth"].get<int>();
  if (doc.contains("trunk_height")) {
    spec.trunk_height = doc["trunk_height"].get<double>();
  }
  if (doc.contains("trunk_radius")) {
    spec.trunk_radius = doc["trunk_radius"].get<double>();
  }
  if (doc.contains("branch_angle_range")) {
    const auto& r = doc["branch_angle_range"];
    if (!r.is_array() || r.size() != 2) {
      throw InvalidSpec("tree spec: branch_angle_range must be [lo, hi]");
    }
    spec.branch_angle_range = {r[0].get<double>(), r[1].get<double>()};
  }
  if (doc.contains("radius_decay")) {
    spec.radius_decay = doc["radius_decay"].get<double>();
  }
  if (doc.contains("points_per_m2")) {
    spec.points_per_m2 = doc["points_per_m2"].get<double>();
  }
  if (doc.contains("leaf_fraction")) {
    spec.leaf_fraction = doc["leaf_fraction"].get<double>();
  }
  if (doc.contains("occlusion_gaps")) {
    for (const auto& jg : doc["occlusion_gaps"]) {
      OcclusionGap gap;
      gap.branch_path = jg.at("branch_path").get<std::vector<int>>();
      gap.start_frac = jg.at("start_frac").get<double>();
      gap.length_frac = jg.at("length_frac").get<double>();
      spec.occlusion_gaps.push_back(std::move(gap));
    }
  }
  if (doc.contains("seed")) spec.seed = doc["seed"].get<std::uint64_t>();
  return spec;
}

inline TreeSpec load_tree_spec(const std::string& path) {
  if (!std::filesystem::exists(path)) {
    throw FileNotFound("load_tree_spec: " + path);
  }
  std::ifstream in(path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("load_tree_spec: ") + e.what(), 0);
  }
  try {
    return tree_spec_from_json(doc);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidSpec(std::string("tree spec: ") + e.what());
  }
}

inline nlohmann::ordered_json tree_spec_to_json(const TreeSpec& spec) {
  nlohmann::ordered_json doc;
  doc["depth"] = spec.depth;
  doc["trunk_height"] = spec.trunk_height;
  doc["trunk_radius"] = spec.trunk_radius;
  doc["branch_angle_range"] = {spec.branch_angle_range.lo_deg,
                               spec.branch_angle_range.hi_deg};
  doc["radius_decay"] = spec.radius_decay;
  doc["points_per_m2"] = spec.points_per_m2;
  doc["leaf_fraction"] = spec.leaf_fraction;
  doc["occlusion_gaps"] = nlohmann::ordered_json::array();
  for (const auto& gap : spec.occlusion_gaps) {
    doc["occlusion_gaps"].push_back({{"branch_path", gap.branch_path},
                                     {"start_frac", gap.start_frac},
                                     {"length_frac", gap.length_frac}});
  }
  doc["seed"] = spec.seed;
  return doc;
}

inline void save_ground_truth(const GroundTruth& truth,
                              const std::string& path) {
  nlohmann::ordered_json doc;
  doc["centerlines"] = nlohmann::ordered_json::array();
  for (const auto& line : truth.centerlines) {
    nlohmann::ordered_json jl = nlohmann::ordered_json::array();
    for (const auto& v : line) {
      jl.push_back({v.position.x, v.position.y, v.position.z, v.radius});
    }
    doc["centerlines"].push_back(std::move(jl));
  }
  doc["labels"] = nlohmann::ordered_json::array();
  for (const auto label : truth.labels) {
    doc["labels"].push_back(label == ClassLabel::wood ? "wood" : "leaf");
  }
  doc["leaf_regions"] = nlohmann::ordered_json::array();
  for (const auto& region : truth.leaf_regions) {
    doc["leaf_regions"].push_back(
        {{"center", {region.center.x, region.center.y, region.center.z}},
         {"axis_u", {region.axis_u.x, region.axis_u.y, region.axis_u.z}},
         {"axis_v", {region.axis_v.x, region.axis_v.y, region.axis_v.z}},
         {"axis_w", {region.axis_w.x, region.axis_w.y, region.axis_w.z}},
         {"semi", {region.semi_u, region.semi_v, region.semi_w}}});
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_ground_truth: cannot open " + path);
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("save_ground_truth: write failed for " + path);
}

}  // namespace skeletree
