// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "skeletree/errors.hpp"

namespace skeletree {

struct RunReport {
  std::string tree_id;
  std::string algorithm;  // "ftsem" or "gsa"; used to pair rows in reports
  std::size_t point_count = 0;
  std::size_t node_count = 0;
  double runtime_s = 0;
  double tpmp_s = 0;  // full precision; presentation rounds to 1 decimal
  std::vector<std::pair<std::string, double>> stage_timings;
  std::size_t residual_branch_count = 0;
};

// Time per million points: runtime scaled to a 10^6-point cloud.
inline double compute_tpmp(double runtime_s, std::size_t point_count) {
  if (point_count < 1) throw InvalidCount("compute_tpmp: point_count < 1");
  if (runtime_s < 0) throw InvalidCount("compute_tpmp: negative runtime");
  return runtime_s * 1e6 / static_cast<double>(point_count);
}

// Presentation rounding, half away from zero.
inline double round_to_tenth(double x) { return std::round(x * 10.0) / 10.0; }

enum class ReportFormat { csv, json };

// Wall-clock stage timer on the monotonic clock.
class StageTimer {
 public:
  StageTimer() : start_(Clock::now()), last_(start_) {}

  void lap(std::string name) {
    const auto now = Clock::now();
    laps_.emplace_back(std::move(name), seconds(now - last_));
    last_ = now;
  }

  double total() const { return seconds(Clock::now() - start_); }

  const std::vector<std::pair<std::string, double>>& laps() const {
    return laps_;
  }

 private:
  using Clock = std::chrono::steady_clock;
  static double seconds(Clock::duration d) {
    return std::chrono::duration<double>(d).count();
  }
  Clock::time_point start_;
  Clock::time_point last_;
  std::vector<std::pair<std::string, double>> laps_;
};

// Emits a comparison table. CSV pairs the two algorithms' runs by tree_id
// (one row per tree, first-appearance order) and appends an average-TPMP
// footer; JSON keeps every report at full precision plus the averages.
inline void emit_report(std::span<const RunReport> reports,
                        const std::string& path, ReportFormat format) {
  if (reports.empty()) throw EmptyInput("emit_report: no reports");

  std::vector<std::string> tree_order;
  std::map<std::string, std::pair<const RunReport*, const RunReport*>> rows;
  double tpmp_sum_ftsem = 0, tpmp_sum_gsa = 0;
  std::size_t n_ftsem = 0, n_gsa = 0;
  for (const auto& r : reports) {
    auto [it, inserted] = rows.try_emplace(r.tree_id, nullptr, nullptr);
    if (inserted) tree_order.push_back(r.tree_id);
    const bool is_gsa = r.algorithm == "gsa";
    auto& slot = is_gsa ? it->second.second : it->second.first;
    if (slot == nullptr) slot = &r;
    if (is_gsa) {
      tpmp_sum_gsa += r.tpmp_s;
      ++n_gsa;
    } else {
      tpmp_sum_ftsem += r.tpmp_s;
      ++n_ftsem;
    }
  }
  const double avg_ftsem = n_ftsem ? tpmp_sum_ftsem / n_ftsem : 0;
  const double avg_gsa = n_gsa ? tpmp_sum_gsa / n_gsa : 0;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("emit_report: cannot open " + path);

  if (format == ReportFormat::csv) {
    out << "tree_id,point_count,node_count_ftsem,node_count_gsa,"
           "runtime_ftsem,runtime_gsa,tpmp_ftsem,tpmp_gsa\n";
    char buf[64];
    auto fixed = [&buf](double v, int digits) {
      std::snprintf(buf, sizeof buf, "%.*f", digits, v);
      return std::string(buf);
    };
    for (const auto& id : tree_order) {
      const auto& [ftsem, gsa] = rows[id];
      const std::size_t points =
          ftsem ? ftsem->point_count : gsa->point_count;
      out << id << ',' << points << ',';
      out << (ftsem ? std::to_string(ftsem->node_count) : "") << ','
          << (gsa ? std::to_string(gsa->node_count) : "") << ','
          << (ftsem ? fixed(ftsem->runtime_s, 3) : "") << ','
          << (gsa ? fixed(gsa->runtime_s, 3) : "") << ','
          << (ftsem ? fixed(round_to_tenth(ftsem->tpmp_s), 1) : "") << ','
          << (gsa ? fixed(round_to_tenth(gsa->tpmp_s), 1) : "") << '\n';
    }
    out << "average_tpmp,,,,,,";
    out << (n_ftsem ? fixed(round_to_tenth(avg_ftsem), 1) : "") << ','
        << (n_gsa ? fixed(round_to_tenth(avg_gsa), 1) : "") << '\n';
  } else {
    nlohmann::ordered_json doc;
    doc["reports"] = nlohmann::ordered_json::array();
    for (const auto& r : reports) {
      nlohmann::ordered_json jr;
      jr["tree_id"] = r.tree_id;
      jr["algorithm"] = r.algorithm;
      jr["point_count"] = r.point_count;
      jr["node_count"] = r.node_count;
      jr["runtime_s"] = r.runtime_s;
      jr["tpmp_s"] = r.tpmp_s;
      nlohmann::ordered_json stages;
      for (const auto& [name, secs] : r.stage_timings) stages[name] = secs;
      jr["stage_timings"] = std::move(stages);
      jr["residual_branch_count"] = r.residual_branch_count;
      doc["reports"].push_back(std::move(jr));
    }
    nlohmann::ordered_json avg;
    if (n_ftsem) avg["ftsem"] = avg_ftsem;
    if (n_gsa) avg["gsa"] = avg_gsa;
    doc["average_tpmp"] = std::move(avg);
    out << doc.dump(2) << '\n';
  }
  if (!out) throw IoError("emit_report: write failed for " + path);
}

}  // namespace skeletree
