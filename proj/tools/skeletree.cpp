// SPDX-License-Identifier: Apache-2.0
// skeletree: curve-skeleton extraction for tree point clouds.
//
// Subcommands:
//   extract  one cloud -> skeleton (+ per-run report)
//   synth    generate a synthetic tree cloud (+ ground truth)
//   bench    batch a directory through both algorithms, emit a report table
//   export   convert a skeleton JSON into another skeleton format
//
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "skeletree/skeletree.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Problems detectable only after flag parsing (e.g. an output extension we
// cannot map to a format) are still usage errors, not data errors.
struct CliUsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string lower_ext(const std::string& path) {
  std::string ext = fs::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext;
}

skeletree::SkeletonFormat skeleton_format_for(const std::string& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".obj") return skeletree::SkeletonFormat::obj_lines;
  if (ext == ".ply") return skeletree::SkeletonFormat::ply_edges;
  if (ext == ".json") return skeletree::SkeletonFormat::json;
  throw CliUsageError("cannot infer skeleton format from \"" + path +
                      "\" (use .obj, .ply, or .json)");
}

skeletree::ReportFormat report_format_for(const std::string& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".csv") return skeletree::ReportFormat::csv;
  if (ext == ".json") return skeletree::ReportFormat::json;
  throw CliUsageError("cannot infer report format from \"" + path +
                      "\" (use .csv or .json)");
}

skeletree::FilterMethod filter_method_from(const std::string& name) {
  using skeletree::FilterMethod;
  if (name == "otsu") return FilterMethod::intensity_otsu;
  if (name == "fixed") return FilterMethod::intensity_fixed;
  if (name == "density") return FilterMethod::density_only;
  if (name == "passthrough") return FilterMethod::passthrough;
  throw skeletree::ConfigError("config: unknown filter method \"" + name +
                               "\"");
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    bool known = false;
    for (const char* k : allowed) known = known || key == k;
    if (!known) {
      throw skeletree::ConfigError("config: unknown field \"" + where + key +
                                   "\"");
    }
  }
}

// Pipeline options shared by `extract` and `bench`: CLI flags layered over an
// optional JSON config file layered over built-in defaults.
struct PipelineCli {
  std::string config_path;
  std::string filter_method = "otsu";
  double fixed_threshold = 0.0;
  double density_ratio = 0.25;
  bool invert_intensity = false;
  int n_divisions = 100;
  double wood_voxel_ratio = 0.25;
  int max_thinning_passes = 0;
  int p_t = 4;
  double theta_t = 120.0;
  int k_candidates = 5;
  double bd_factor = 3.0;
  std::string candidates = "all";
  bool no_connect = false;
  double slice_thickness = 0.0;
  double residual_switch = 0.15;
  double smooth_lambda = 0.5;
  int smooth_iters = 3;
  bool no_refine = false;
  int gsa_knn = 8;
  double gsa_bin_width = 0.2;
  double gsa_root_quantile = 0.005;

  CLI::Option* o_filter_method = nullptr;
  CLI::Option* o_fixed_threshold = nullptr;
  CLI::Option* o_density_ratio = nullptr;
  CLI::Option* o_invert_intensity = nullptr;
  CLI::Option* o_n_divisions = nullptr;
  CLI::Option* o_wood_voxel_ratio = nullptr;
  CLI::Option* o_max_thinning_passes = nullptr;
  CLI::Option* o_p_t = nullptr;
  CLI::Option* o_theta_t = nullptr;
  CLI::Option* o_k_candidates = nullptr;
  CLI::Option* o_bd_factor = nullptr;
  CLI::Option* o_candidates = nullptr;
  CLI::Option* o_no_connect = nullptr;
  CLI::Option* o_slice_thickness = nullptr;
  CLI::Option* o_residual_switch = nullptr;
  CLI::Option* o_smooth_lambda = nullptr;
  CLI::Option* o_smooth_iters = nullptr;
  CLI::Option* o_no_refine = nullptr;
  CLI::Option* o_gsa_knn = nullptr;
  CLI::Option* o_gsa_bin_width = nullptr;
  CLI::Option* o_gsa_root_quantile = nullptr;

  bool file_sets_filter_method = false;

  void attach(CLI::App& cmd) {
    cmd.add_option("--config", config_path,
                   "JSON config file (flags given here override it)");
    o_filter_method =
        cmd.add_option("--filter-method", filter_method,
                       "Leaf filter: otsu|fixed|density|passthrough")
            ->check(CLI::IsMember({"otsu", "fixed", "density", "passthrough"}));
    o_fixed_threshold = cmd.add_option(
        "--fixed-threshold", fixed_threshold,
        "Intensity threshold for --filter-method fixed");
    o_density_ratio = cmd.add_option(
        "--density-ratio", density_ratio,
        "Density gate: voxel counts >= ratio * median count as wood");
    o_invert_intensity = cmd.add_flag(
        "--invert-intensity", invert_intensity,
        "Treat low intensity as wood (scanner returns inverted)");
    o_n_divisions = cmd.add_option("--n-divisions", n_divisions,
                                   "Voxel divisions per axis");
    o_wood_voxel_ratio = cmd.add_option("--wood-voxel-ratio", wood_voxel_ratio,
                                        "Wood-voxel median ratio");
    o_max_thinning_passes =
        cmd.add_option("--max-thinning-passes", max_thinning_passes,
                       "Thinning pass cap (0 = run to fixpoint)");
    o_p_t = cmd.add_option("--pt", p_t, "Minimum branch node count processed");
    o_theta_t = cmd.add_option("--theta-t", theta_t,
                               "Connection angle gate in degrees");
    o_k_candidates = cmd.add_option("--k-candidates", k_candidates,
                                    "Candidate nodes examined per breakpoint");
    o_bd_factor = cmd.add_option("--bd-factor", bd_factor,
                                 "Distance leash vs. the fallback node");
    o_candidates = cmd.add_option("--candidates", candidates,
                                  "Candidate pool: all|endpoints-only")
                       ->check(CLI::IsMember({"all", "endpoints-only"}));
    o_no_connect = cmd.add_flag("--no-breakpoint-connection", no_connect,
                                "Skip breakpoint connection");
    o_slice_thickness =
        cmd.add_option("--slice-thickness", slice_thickness,
                       "Recenter slice thickness (<=0: voxel z-size)");
    o_residual_switch =
        cmd.add_option("--residual-switch", residual_switch,
                       "Relative circle residual that triggers ellipse refit");
    o_smooth_lambda = cmd.add_option("--smooth-lambda", smooth_lambda,
                                     "Laplacian smoothing weight in [0,1]");
    o_smooth_iters = cmd.add_option("--smooth-iters", smooth_iters,
                                    "Laplacian smoothing iterations");
    o_no_refine = cmd.add_flag("--no-refine", no_refine,
                               "Skip recentering and smoothing");
    o_gsa_knn = cmd.add_option("--knn", gsa_knn,
                               "Baseline: neighbors in the point graph");
    o_gsa_bin_width = cmd.add_option("--bin-width", gsa_bin_width,
                                     "Baseline: geodesic level width (m)");
    o_gsa_root_quantile =
        cmd.add_option("--root-quantile", gsa_root_quantile,
                       "Baseline: lowest fraction by z forming the root set");
  }

  void apply_config_file(skeletree::PipelineConfig& cfg,
                         skeletree::GsaParams& gsa) {
    if (!fs::exists(config_path)) {
      throw skeletree::FileNotFound("config: " + config_path);
    }
    json doc;
    {
      std::ifstream in(config_path);
      try {
        in >> doc;
      } catch (const json::exception& e) {
        throw skeletree::ConfigError(std::string("config: ") + e.what());
      }
    }
    try {
      check_keys(doc,
                 {"version", "filter", "n_divisions", "wood_voxel_ratio",
                  "max_thinning_passes", "connect", "refine", "gsa", "tree_id"},
                 "");
      if (!doc.contains("version") || !doc["version"].is_number_integer() ||
          doc["version"].get<int>() != 1) {
        throw skeletree::ConfigError("config: missing or unsupported version "
                                     "(expected \"version\": 1)");
      }
      if (doc.contains("filter")) {
        const json& f = doc["filter"];
        check_keys(f,
                   {"method", "fixed_threshold", "density_ratio",
                    "invert_intensity"},
                   "filter.");
        if (f.contains("method")) {
          cfg.filter.method = filter_method_from(f["method"].get<std::string>());
          file_sets_filter_method = true;
        }
        if (f.contains("fixed_threshold")) {
          cfg.filter.fixed_threshold = f["fixed_threshold"].get<double>();
        }
        if (f.contains("density_ratio")) {
          cfg.filter.density_ratio_threshold = f["density_ratio"].get<double>();
        }
        if (f.contains("invert_intensity")) {
          cfg.filter.invert_intensity = f["invert_intensity"].get<bool>();
        }
      }
      if (doc.contains("n_divisions")) {
        cfg.n_divisions = doc["n_divisions"].get<int>();
      }
      if (doc.contains("wood_voxel_ratio")) {
        cfg.wood_voxel_ratio = doc["wood_voxel_ratio"].get<double>();
      }
      if (doc.contains("max_thinning_passes")) {
        cfg.max_thinning_passes = doc["max_thinning_passes"].get<int>();
      }
      if (doc.contains("connect")) {
        const json& c = doc["connect"];
        check_keys(c,
                   {"enabled", "pt", "theta_t", "k_candidates", "bd_factor",
                    "candidates"},
                   "connect.");
        if (c.contains("enabled")) cfg.connect_enabled = c["enabled"].get<bool>();
        if (c.contains("pt")) cfg.connect.p_t = c["pt"].get<int>();
        if (c.contains("theta_t")) {
          cfg.connect.theta_t_deg = c["theta_t"].get<double>();
        }
        if (c.contains("k_candidates")) {
          cfg.connect.k_candidates = c["k_candidates"].get<int>();
        }
        if (c.contains("bd_factor")) {
          cfg.connect.bd_factor = c["bd_factor"].get<double>();
        }
        if (c.contains("candidates")) {
          const std::string pool = c["candidates"].get<std::string>();
          if (pool != "all" && pool != "endpoints-only") {
            throw skeletree::ConfigError(
                "config: connect.candidates must be \"all\" or "
                "\"endpoints-only\"");
          }
          cfg.connect.candidates_endpoints_only = pool == "endpoints-only";
        }
      }
      if (doc.contains("refine")) {
        const json& r = doc["refine"];
        check_keys(r,
                   {"enabled", "slice_thickness", "residual_switch", "lambda",
                    "iterations"},
                   "refine.");
        if (r.contains("enabled")) cfg.refine_enabled = r["enabled"].get<bool>();
        if (r.contains("slice_thickness")) {
          cfg.refine.slice_thickness = r["slice_thickness"].get<double>();
        }
        if (r.contains("residual_switch")) {
          cfg.refine.residual_switch = r["residual_switch"].get<double>();
        }
        if (r.contains("lambda")) cfg.refine.lambda = r["lambda"].get<double>();
        if (r.contains("iterations")) {
          cfg.refine.iterations = r["iterations"].get<int>();
        }
      }
      if (doc.contains("gsa")) {
        const json& g = doc["gsa"];
        check_keys(g, {"knn", "bin_width", "root_quantile"}, "gsa.");
        if (g.contains("knn")) gsa.knn = g["knn"].get<int>();
        if (g.contains("bin_width")) gsa.bin_width = g["bin_width"].get<double>();
        if (g.contains("root_quantile")) {
          gsa.root_quantile = g["root_quantile"].get<double>();
        }
      }
      if (doc.contains("tree_id")) cfg.tree_id = doc["tree_id"].get<std::string>();
    } catch (const json::exception& e) {
      throw skeletree::ConfigError(std::string("config: ") + e.what());
    }
  }

  // defaults -> config file -> explicitly given flags
  skeletree::PipelineConfig resolve(skeletree::GsaParams& gsa) {
    skeletree::PipelineConfig cfg;
    if (!config_path.empty()) apply_config_file(cfg, gsa);
    if (o_filter_method->count()) {
      cfg.filter.method = filter_method_from(filter_method);
    }
    if (o_fixed_threshold->count()) cfg.filter.fixed_threshold = fixed_threshold;
    if (o_density_ratio->count()) {
      cfg.filter.density_ratio_threshold = density_ratio;
    }
    if (o_invert_intensity->count()) cfg.filter.invert_intensity = true;
    if (o_n_divisions->count()) cfg.n_divisions = n_divisions;
    if (o_wood_voxel_ratio->count()) cfg.wood_voxel_ratio = wood_voxel_ratio;
    if (o_max_thinning_passes->count()) {
      cfg.max_thinning_passes = max_thinning_passes;
    }
    if (o_p_t->count()) cfg.connect.p_t = p_t;
    if (o_theta_t->count()) cfg.connect.theta_t_deg = theta_t;
    if (o_k_candidates->count()) cfg.connect.k_candidates = k_candidates;
    if (o_bd_factor->count()) cfg.connect.bd_factor = bd_factor;
    if (o_candidates->count()) {
      cfg.connect.candidates_endpoints_only = candidates == "endpoints-only";
    }
    if (o_no_connect->count()) cfg.connect_enabled = false;
    if (o_slice_thickness->count()) cfg.refine.slice_thickness = slice_thickness;
    if (o_residual_switch->count()) cfg.refine.residual_switch = residual_switch;
    if (o_smooth_lambda->count()) cfg.refine.lambda = smooth_lambda;
    if (o_smooth_iters->count()) cfg.refine.iterations = smooth_iters;
    if (o_no_refine->count()) cfg.refine_enabled = false;
    if (o_gsa_knn->count()) gsa.knn = gsa_knn;
    if (o_gsa_bin_width->count()) gsa.bin_width = gsa_bin_width;
    if (o_gsa_root_quantile->count()) gsa.root_quantile = gsa_root_quantile;
    return cfg;
  }

  bool filter_method_explicit() const {
    return o_filter_method->count() > 0 || file_sets_filter_method;
  }
};

// An intensity filter cannot run on a cloud that has no intensity column.
// When the method was never asked for explicitly, degrade to the density gate
// with a warning instead of failing the run.
void adapt_filter_to_cloud(const skeletree::PointCloud& cloud,
                           skeletree::PipelineConfig& cfg,
                           bool method_explicit) {
  using skeletree::FilterMethod;
  const bool needs_intensity =
      cfg.filter.method == FilterMethod::intensity_otsu ||
      cfg.filter.method == FilterMethod::intensity_fixed;
  if (needs_intensity && !cloud.has_intensity && !method_explicit) {
    std::cerr << "warning: cloud has no intensity column; "
                 "falling back to --filter-method density\n";
    cfg.filter.method = FilterMethod::density_only;
  }
}

skeletree::PointCloud load_with_policy(const std::string& path, bool tolerant) {
  if (!tolerant) return skeletree::load_cloud(path);
  skeletree::LoadStats stats;
  skeletree::PointCloud cloud =
      skeletree::load_cloud(path, skeletree::CloudFormat::auto_detect, &stats);
  if (stats.bad_lines > 0) {
    std::cerr << "warning: skipped " << stats.bad_lines
              << " malformed record(s) in " << path << "\n";
  }
  return cloud;
}

void print_run_summary(const skeletree::SkeletonGraph& graph,
                       const skeletree::RunReport& report) {
  std::cout << report.tree_id << " [" << report.algorithm
            << "]: " << report.point_count << " points -> "
            << graph.nodes.size() << " nodes, " << graph.edges.size()
            << " edges, " << graph.branch_count() << " branch(es) in "
            << report.runtime_s << " s (tpmp " << report.tpmp_s << ")\n";
}

int run_extract(const std::string& in_path, const std::string& out_path,
                const std::string& report_path, const std::string& algo,
                const std::string& tree_id, bool tolerant, PipelineCli& pipe) {
  // Resolve formats before the heavy work so usage errors fail fast.
  skeletree::SkeletonFormat out_format{};
  if (!out_path.empty()) out_format = skeleton_format_for(out_path);
  skeletree::ReportFormat report_format{};
  if (!report_path.empty()) report_format = report_format_for(report_path);

  skeletree::GsaParams gsa;
  skeletree::PipelineConfig cfg = pipe.resolve(gsa);
  if (!tree_id.empty()) cfg.tree_id = tree_id;

  skeletree::PointCloud cloud = load_with_policy(in_path, tolerant);

  skeletree::SkeletonGraph graph;
  skeletree::RunReport report;
  if (algo == "gsa") {
    std::tie(graph, report) = skeletree::run_gsa(cloud, gsa, cfg.tree_id);
  } else {
    adapt_filter_to_cloud(cloud, cfg, pipe.filter_method_explicit());
    std::tie(graph, report) = skeletree::run_ftsem(cloud, cfg);
  }

  if (!out_path.empty()) skeletree::export_skeleton(graph, out_path, out_format);
  if (!report_path.empty()) {
    const skeletree::RunReport reports[] = {report};
    skeletree::emit_report(reports, report_path, report_format);
  }
  print_run_summary(graph, report);
  return 0;
}

int run_synth(const std::string& spec_path, const std::string& out_path,
              const std::string& truth_path, bool binary_ply,
              std::uint64_t seed, bool seed_given) {
  skeletree::CloudExportFormat format{};
  const std::string ext = lower_ext(out_path);
  if (ext == ".xyz" || ext == ".txt") {
    format = skeletree::CloudExportFormat::xyz_text;
  } else if (ext == ".ply") {
    format = binary_ply ? skeletree::CloudExportFormat::ply_binary
                        : skeletree::CloudExportFormat::ply_ascii;
  } else {
    throw CliUsageError("cannot infer cloud format from \"" + out_path +
                        "\" (use .xyz, .txt, or .ply)");
  }

  skeletree::TreeSpec spec;
  if (!spec_path.empty()) spec = skeletree::load_tree_spec(spec_path);
  if (seed_given) spec.seed = seed;

  auto [cloud, truth] = skeletree::generate(spec);
  skeletree::export_cloud(cloud, out_path, format);
  if (!truth_path.empty()) skeletree::save_ground_truth(truth, truth_path);
  std::cout << "synth: " << cloud.size() << " points ("
            << truth.centerlines.size() << " centerline segment(s), "
            << truth.leaf_regions.size() << " leaf region(s)) -> " << out_path
            << "\n";
  return 0;
}

int run_bench(const std::string& dir, const std::string& report_path,
              bool tolerant, PipelineCli& pipe) {
  const skeletree::ReportFormat report_format = report_format_for(report_path);
  if (!fs::is_directory(dir)) {
    throw skeletree::FileNotFound("bench: not a directory: " + dir);
  }
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = lower_ext(entry.path().string());
    if (ext == ".xyz" || ext == ".txt" || ext == ".ply") {
      files.push_back(entry.path().string());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw skeletree::EmptyInput("bench: no cloud files (.xyz/.txt/.ply) in " +
                                dir);
  }

  skeletree::GsaParams gsa;
  const skeletree::PipelineConfig base_cfg = pipe.resolve(gsa);

  std::vector<skeletree::RunReport> reports;
  for (const std::string& path : files) {
    skeletree::PointCloud cloud = load_with_policy(path, tolerant);
    skeletree::PipelineConfig cfg = base_cfg;
    adapt_filter_to_cloud(cloud, cfg, pipe.filter_method_explicit());
    auto [ftsem_graph, ftsem_report] = skeletree::run_ftsem(cloud, cfg);
    print_run_summary(ftsem_graph, ftsem_report);
    reports.push_back(std::move(ftsem_report));
    auto [gsa_graph, gsa_report] =
        skeletree::run_gsa(cloud, gsa, reports.back().tree_id);
    print_run_summary(gsa_graph, gsa_report);
    reports.push_back(std::move(gsa_report));
  }
  skeletree::emit_report(reports, report_path, report_format);
  std::cout << "bench: wrote " << report_path << " (" << files.size()
            << " cloud(s))\n";
  return 0;
}

int run_export(const std::string& in_path, const std::string& out_path) {
  const skeletree::SkeletonFormat format = skeleton_format_for(out_path);
  skeletree::SkeletonGraph graph = skeletree::import_skeleton_json(in_path);
  skeletree::export_skeleton(graph, out_path, format);
  std::cout << "export: " << graph.nodes.size() << " nodes, "
            << graph.edges.size() << " edges -> " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"skeletree: curve-skeleton extraction for tree point clouds"};
  app.require_subcommand(1);

  // --- extract ---
  CLI::App* extract = app.add_subcommand(
      "extract", "Extract a skeleton from one point cloud");
  std::string ex_in, ex_out, ex_report, ex_algo = "ftsem", ex_tree_id;
  bool ex_tolerant = false;
  extract->add_option("--in", ex_in, "Input cloud (.xyz/.txt/.ply)")
      ->required();
  extract->add_option("--out", ex_out, "Skeleton output (.obj/.ply/.json)");
  extract->add_option("--report", ex_report, "Run report (.csv/.json)");
  extract->add_option("--algo", ex_algo, "Algorithm: ftsem|gsa")
      ->check(CLI::IsMember({"ftsem", "gsa"}));
  extract->add_option("--tree-id", ex_tree_id,
                      "Report label (default: input file stem)");
  extract->add_flag("--tolerant", ex_tolerant,
                    "Skip malformed input records instead of failing");
  PipelineCli ex_pipe;
  ex_pipe.attach(*extract);

  // --- synth ---
  CLI::App* synth =
      app.add_subcommand("synth", "Generate a synthetic tree cloud");
  std::string sy_spec, sy_out, sy_truth;
  bool sy_binary = false;
  std::uint64_t sy_seed = 1;
  synth->add_option("--spec", sy_spec, "Tree spec JSON (default spec if absent)");
  synth->add_option("--out", sy_out, "Output cloud (.xyz/.txt/.ply)")
      ->required();
  synth->add_option("--truth", sy_truth, "Ground-truth JSON output");
  synth->add_flag("--binary", sy_binary, "Write binary PLY instead of ASCII");
  CLI::Option* sy_seed_opt =
      synth->add_option("--seed", sy_seed, "Override the spec seed");

  // --- bench ---
  CLI::App* bench = app.add_subcommand(
      "bench", "Run both algorithms over every cloud in a directory");
  std::string be_dir, be_report;
  bool be_tolerant = false;
  bench->add_option("--dir", be_dir, "Directory of clouds")->required();
  bench->add_option("--report", be_report, "Report output (.csv/.json)")
      ->required();
  bench->add_flag("--tolerant", be_tolerant,
                  "Skip malformed input records instead of failing");
  PipelineCli be_pipe;
  be_pipe.attach(*bench);

  // --- export ---
  CLI::App* do_export =
      app.add_subcommand("export", "Convert a skeleton JSON to another format");
  std::string xp_in, xp_out;
  do_export->add_option("--in", xp_in, "Skeleton JSON input")->required();
  do_export->add_option("--out", xp_out, "Skeleton output (.obj/.ply/.json)")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    std::cerr << app.help() << std::flush;
    return 1;
  }

  try {
    if (extract->parsed()) {
      return run_extract(ex_in, ex_out, ex_report, ex_algo, ex_tree_id,
                         ex_tolerant, ex_pipe);
    }
    if (synth->parsed()) {
      return run_synth(sy_spec, sy_out, sy_truth, sy_binary, sy_seed,
                       sy_seed_opt->count() > 0);
    }
    if (bench->parsed()) {
      return run_bench(be_dir, be_report, be_tolerant, be_pipe);
    }
    if (do_export->parsed()) return run_export(xp_in, xp_out);
  } catch (const CliUsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    std::cerr << app.help() << std::flush;
    return 1;
  } catch (const skeletree::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
