// Copyright 2026 The LidarForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lidarforge/annotate/cluster.hpp"
#include "lidarforge/annotate/ground.hpp"
#include "lidarforge/annotate/propagate.hpp"
#include "lidarforge/annotate/registration.hpp"
#include "lidarforge/cli/config.hpp"
#include "lidarforge/core/error.hpp"
#include "lidarforge/core/parallel.hpp"
#include "lidarforge/dataset/generate.hpp"
#include "lidarforge/dataset/lpc.hpp"
#include "lidarforge/dataset/ply_export.hpp"
#include "lidarforge/dataset/sampling.hpp"
#include "lidarforge/geometry/mesh_io.hpp"
#include "lidarforge/metrics/metrics.hpp"

namespace lidarforge {

inline constexpr const char* kVersion = "1.0.0";

namespace cli {

namespace fs = std::filesystem;

/// Sorted .lpc files of a directory, or the path itself when it names a file.
inline std::vector<fs::path> list_lpc(const fs::path& path) {
  if (!fs::exists(path)) throw Error("no such file or directory: " + path.string());
  if (!fs::is_directory(path)) return {path};
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(path)) {
    if (e.is_regular_file() && e.path().extension() == ".lpc") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<LabeledPointCloud> read_frames(const fs::path& dir) {
  std::vector<LabeledPointCloud> frames;
  for (const auto& p : list_lpc(dir)) frames.push_back(read_lpc(p));
  if (frames.empty()) throw Error("no .lpc files in " + dir.string());
  return frames;
}

inline void refuse_existing(const fs::path& path, bool force) {
  if (!force && fs::exists(path)) {
    throw Error("output " + path.string() + " already exists (pass --force to overwrite)");
  }
}

/// A directory output must be absent or empty; --force clears the files this
/// tool would write there.
inline void prepare_output_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw Error("output " + dir.string() + " is not a directory");
    if (!fs::is_empty(dir)) {
      if (!force) throw Error("output directory " + dir.string() + " is not empty (pass --force to overwrite)");
      for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() &&
            (e.path().extension() == ".lpc" || e.path().filename() == kManifestFileName)) {
          fs::remove(e.path());
        }
      }
    }
  }
  fs::create_directories(dir);
}

inline unsigned resolve_workers(unsigned flag) { return flag > 0 ? flag : default_workers(); }

inline std::string fmt(const char* format, double a, double b, double c) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), format, a, b, c);
  return buf;
}

inline std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

inline Colormap load_colormap(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open colormap " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError(path.string() + ": colormap must map class names to [r, g, b]");
  Colormap map;
  for (const auto& [name, rgb] : j.items()) {
    if (!rgb.is_array() || rgb.size() != 3) throw ConfigError(path.string() + ": '" + name + "' must be [r, g, b]");
    Rgb c{};
    for (int k = 0; k < 3; ++k) {
      if (!rgb[k].is_number_unsigned() || rgb[k].get<unsigned>() > 255) {
        throw ConfigError(path.string() + ": '" + name + "' components must be 0..255");
      }
      c[k] = static_cast<std::uint8_t>(rgb[k].get<unsigned>());
    }
    map[name] = c;
  }
  return map;
}

struct GenerateArgs {
  std::string config, out, name;
  std::optional<std::size_t> count;
  std::optional<std::uint64_t> seed;
  unsigned workers = 0;
  bool force = false;
};

inline void run_generate(const GenerateArgs& a, std::ostream& out) {
  const RunConfig cfg = load_run_config(a.config);
  GenerateOptions opt;
  opt.name = a.name.empty() ? cfg.output.name : a.name;
  opt.master_seed = a.seed ? *a.seed : cfg.output.seed.value_or(0);
  if (a.count) {
    opt.count = *a.count;
  } else if (cfg.output.count) {
    opt.count = *cfg.output.count;
  } else {
    throw ConfigError("generate: --count or output.count is required");
  }
  opt.out_dir = a.out.empty() ? cfg.output.dir : fs::path(a.out);
  if (opt.out_dir.empty()) throw ConfigError("generate: --out or output.dir is required");
  opt.workers = resolve_workers(a.workers);
  opt.config_digest = cfg.digest;
  if (cfg.scene.ground_class) opt.ground_class = class_index(cfg.scene.class_names, *cfg.scene.ground_class);

  const AssetLibrary lib = load_asset_library(cfg.scene.assets, cfg.scene.class_names);
  PlacementRules rules = cfg.scene.rules;
  if (!cfg.scene.counts_explicit) {
    for (std::size_t c = 0; c < rules.counts.size(); ++c) {
      if (lib.assets_of_class(static_cast<Label>(c)).empty()) rules.counts[c] = {0, 0};
    }
  }
  validate_rules(lib, rules, cfg.lidar.range_max_m);
  prepare_output_dir(opt.out_dir, a.force);
  const DatasetManifest m = generate_dataset(lib, rules, cfg.lidar, opt);

  std::uint64_t total = 0;
  for (auto c : m.histogram) total += c;
  out << "generated " << m.files.size() << " clouds (" << total << " points) in " << opt.out_dir.string()
      << ", config digest " << m.config_digest << "\n";
  if (total > 0) out << distribution_text(class_distribution(m.class_names, m.histogram));
}

struct MixArgs {
  std::string synthetic, real, config, out;
  std::optional<std::size_t> total;
  std::optional<double> fraction;
  std::uint64_t seed = 0;
  bool force = false;
};

inline void run_mix(const MixArgs& a, std::ostream& out) {
  MixSpec spec;
  if (!a.config.empty()) {
    const RunConfig cfg = load_run_config(a.config);
    if (cfg.mix_total) spec.total = *cfg.mix_total;
    if (cfg.mix_synthetic_fraction) spec.synthetic_fraction = *cfg.mix_synthetic_fraction;
  }
  if (a.total) spec.total = *a.total;
  if (a.fraction) spec.synthetic_fraction = *a.fraction;
  for (const auto& p : list_lpc(a.synthetic)) spec.synthetic_pool.push_back(p.generic_string());
  if (!a.real.empty()) {
    for (const auto& p : list_lpc(a.real)) spec.real_pool.push_back(p.generic_string());
  }
  refuse_existing(a.out, a.force);
  const MixResult r = mix_datasets(spec, a.seed);

  nlohmann::ordered_json j;
  j["seed"] = a.seed;
  j["total"] = spec.total;
  j["synthetic_fraction"] = spec.synthetic_fraction;
  auto entries = nlohmann::ordered_json::array();
  for (const auto& e : r.entries) {
    entries.push_back({{"path", e.path},
                       {"source", e.source == Source::kSynthetic ? "synthetic" : "real"},
                       {"repetitions", e.repetitions}});
  }
  j["entries"] = std::move(entries);
  write_file_text(a.out, j.dump(2) + "\n");
  out << "mix: " << r.total(Source::kSynthetic) << " synthetic + " << r.total(Source::kReal) << " real entries -> "
      << a.out << "\n";
}

struct SplitArgs {
  std::string input, out;
  std::size_t val = 0;
  std::uint64_t seed = 0;
  bool force = false;
};

inline void run_split(const SplitArgs& a, std::ostream& out) {
  std::vector<std::string> files;
  for (const auto& p : list_lpc(a.input)) files.push_back(p.filename().string());
  refuse_existing(a.out, a.force);
  const Split s = split_dataset(files, a.val, a.seed);
  nlohmann::ordered_json j;
  j["seed"] = a.seed;
  j["train"] = s.train;
  j["val"] = s.val;
  write_file_text(a.out, j.dump(2) + "\n");
  out << "split: " << s.train.size() << " train, " << s.val.size() << " val -> " << a.out << "\n";
}

struct DownsampleArgs {
  std::string input, out, config;
  std::optional<std::size_t> points;
  std::uint64_t seed = 0;
  bool force = false;
};

inline void run_downsample(const DownsampleArgs& a, std::ostream& out) {
  std::optional<std::size_t> k = a.points;
  if (!k && !a.config.empty()) k = load_run_config(a.config).downsample_points;
  if (!k) throw ConfigError("downsample: --points or downsample.points is required");
  if (fs::is_directory(a.input)) {
    const auto files = list_lpc(a.input);
    prepare_output_dir(a.out, a.force);
    for (std::size_t i = 0; i < files.size(); ++i) {
      write_lpc(downsample(read_lpc(files[i]), *k, derive_seed(a.seed, i)), fs::path(a.out) / files[i].filename());
    }
    out << "downsampled " << files.size() << " clouds to at most " << *k << " points -> " << a.out << "\n";
    return;
  }
  refuse_existing(a.out, a.force);
  const LabeledPointCloud cloud = downsample(read_lpc(a.input), *k, a.seed);
  write_lpc(cloud, a.out);
  out << "downsampled to " << cloud.size() << " points -> " << a.out << "\n";
}

struct RegisterArgs {
  std::string input, trajectory, map;
  IcpParams icp;
  double map_voxel = kDefaultMapVoxel;
  unsigned workers = 0;
  bool keep_ground = false;
  bool force = false;
};

inline void run_register(const RegisterArgs& a, std::ostream& out) {
  const auto frames = read_frames(a.input);
  refuse_existing(a.trajectory, a.force);
  if (!a.map.empty()) refuse_existing(a.map, a.force);
  IcpParams params = a.icp;
  params.workers = resolve_workers(a.workers);
  params.exclude_ground = !a.keep_ground;
  const SequenceRegistration reg = register_sequence(frames, params, a.map_voxel);
  for (std::size_t i = 0; i < reg.steps.size(); ++i) {
    const IcpResult& r = reg.steps[i];
    char buf[160];
    std::snprintf(buf, sizeof(buf), "frame %zu: rmse %.4f m, %zu matches, %d iterations%s\n", i + 1, r.rmse,
                  r.correspondences, r.iterations, r.converged ? "" : " (not converged)");
    out << buf;
  }
  write_trajectory(reg.poses, a.trajectory);
  if (!a.map.empty()) write_lpc(reg.map, a.map);
  out << "registered " << frames.size() << " frames, map " << reg.map.size() << " points\n";
}

struct ClusterArgs {
  std::string map, out, ground = "ransac", assignments_from_labels;
  double linkage = 0.5;
  std::size_t min_size = 20;
  double z_threshold = 0.2;
  std::uint64_t seed = 0;
  bool force = false;
};

inline void run_cluster(const ClusterArgs& a, std::ostream& out) {
  const LabeledPointCloud map = read_lpc(a.map);
  refuse_existing(a.out, a.force);
  if (!a.assignments_from_labels.empty()) refuse_existing(a.assignments_from_labels, a.force);

  std::vector<std::size_t> keep;
  if (a.ground == "none") {
    keep.resize(map.size());
    for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = i;
  } else {
    GroundParams gp;
    gp.method = a.ground == "z" ? GroundMethod::kZThreshold : GroundMethod::kRansac;
    gp.z_threshold_m = a.z_threshold;
    gp.seed = a.seed;
    const auto mask = remove_ground(map.points, gp);
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (!mask[i]) keep.push_back(i);
    }
  }
  const LabeledPointCloud above = select_points(map, keep);
  ClusterSet set = euclidean_cluster(above.points, a.linkage, a.min_size);
  write_lpc(cluster_cloud(set), a.out);

  out << "cluster count centroid_x centroid_y centroid_z extent_x extent_y extent_z\n";
  for (std::size_t c = 0; c < set.clusters.size(); ++c) {
    const Cluster& cl = set.clusters[c];
    const Vec3 e = cl.extent.extent();
    out << c << ' ' << cl.count << ' ' << fmt("%.3f %.3f %.3f", cl.centroid.x, cl.centroid.y, cl.centroid.z) << ' '
        << fmt("%.3f %.3f %.3f", e.x, e.y, e.z) << "\n";
  }
  out << set.clusters.size() << " clusters over " << above.size() << " non-ground points ("
      << map.size() - above.size() << " ground)\n";

  if (!a.assignments_from_labels.empty()) {
    assign_by_majority(set, above.labels);
    std::string text;
    for (std::size_t c = 0; c < set.clusters.size(); ++c) {
      if (set.clusters[c].assigned_class) {
        text += std::to_string(c) + ' ' + map.class_names[*set.clusters[c].assigned_class] + '\n';
      }
    }
    write_file_text(a.assignments_from_labels, text);
  }
}

struct PropagateArgs {
  std::string frames, trajectory, clusters, assignments, classes, other = "other", out;
  double radius = 0.3;
  unsigned workers = 0;
  bool force = false;
};

inline void run_propagate(const PropagateArgs& a, std::ostream& out) {
  const auto paths = list_lpc(a.frames);
  std::vector<LabeledPointCloud> frames;
  for (const auto& p : paths) frames.push_back(read_lpc(p));
  if (frames.empty()) throw Error("no .lpc files in " + a.frames);
  const std::vector<std::string> class_names = a.classes.empty() ? frames.front().class_names : split_csv(a.classes);
  const auto other = class_index(class_names, a.other);
  if (!other) throw ConfigError("propagate: class '" + a.other + "' is not in the class list");
  const Trajectory trajectory = read_trajectory(a.trajectory);
  ClusterSet set = cluster_set_from_cloud(read_lpc(a.clusters));
  if (!a.assignments.empty()) apply_assignments(set, read_cluster_assignments(a.assignments, class_names));
  prepare_output_dir(a.out, a.force);
  const auto labeled = propagate_labels(frames, trajectory, set, a.radius, *other, class_names, resolve_workers(a.workers));
  for (std::size_t i = 0; i < labeled.size(); ++i) write_lpc(labeled[i], fs::path(a.out) / paths[i].filename());
  out << "labeled " << labeled.size() << " frames -> " << a.out << "\n";
}

struct EvalArgs {
  std::string gt, pred, out;
  unsigned workers = 0;
};

inline void run_eval(const EvalArgs& a, std::ostream& out) {
  const auto gt = list_lpc(a.gt);
  std::vector<fs::path> pred;
  if (fs::is_directory(a.pred)) {
    for (const auto& g : gt) {
      const fs::path p = fs::path(a.pred) / g.filename();
      if (!fs::exists(p)) throw Error("eval: no prediction for " + g.filename().string());
      pred.push_back(p);
    }
  } else {
    if (gt.size() != 1) throw Error("eval: a single prediction file needs a single ground-truth file");
    pred.push_back(a.pred);
  }
  if (gt.empty()) throw Error("eval: no ground-truth files in " + a.gt);

  const std::vector<std::string> names = read_lpc(gt.front()).class_names;
  std::vector<ConfusionMatrix> partial(gt.size(), ConfusionMatrix(names));
  parallel_for(gt.size(), resolve_workers(a.workers), [&](std::size_t i) {
    const LabeledPointCloud g = read_lpc(gt[i]);
    const LabeledPointCloud p = read_lpc(pred[i]);
    if (g.class_names != names || p.class_names != names) {
      throw Error("eval: class table of " + gt[i].filename().string() + " differs");
    }
    try {
      partial[i].accumulate(g.labels, p.labels);
    } catch (const Error& e) {
      throw Error(gt[i].filename().string() + ": " + e.what());
    }
  });
  ConfusionMatrix cm(names);
  for (const auto& m : partial) cm.merge(m);
  const std::string text = report_json(iou_report(cm), cm).dump(2) + "\n";
  if (!a.out.empty()) write_file_text(a.out, text);
  out << text;
}

struct ExportArgs {
  std::string input, pred, trajectory, colormap, out;
  bool force = false;
};

inline void run_export_ply(const ExportArgs& a, std::ostream& out) {
  const auto files = list_lpc(a.input);
  if (files.empty()) throw Error("no .lpc files in " + a.input);
  std::optional<Trajectory> trajectory;
  if (!a.trajectory.empty()) {
    trajectory = read_trajectory(a.trajectory);
    if (trajectory->size() < files.size()) throw Error("export-ply: trajectory shorter than the frame list");
  }
  std::vector<fs::path> preds;
  if (!a.pred.empty()) {
    if (fs::is_directory(a.pred)) {
      for (const auto& f : files) preds.push_back(fs::path(a.pred) / f.filename());
    } else {
      preds.push_back(a.pred);
    }
    if (preds.size() != files.size()) throw Error("export-ply: prediction files do not pair with inputs");
  }
  const Colormap colormap = a.colormap.empty() ? default_colormap() : load_colormap(a.colormap);
  refuse_existing(a.out, a.force);

  std::vector<LabeledPointCloud> clouds;
  std::vector<Label> predictions;
  for (std::size_t i = 0; i < files.size(); ++i) {
    LabeledPointCloud c = read_lpc(files[i]);
    if (trajectory) c = transform_cloud(c, (*trajectory)[i]);
    c.rings.clear();
    c.columns.clear();
    if (!preds.empty()) {
      const LabeledPointCloud p = read_lpc(preds[i]);
      if (p.class_names != c.class_names) throw Error("export-ply: prediction class table differs");
      if (p.size() != c.size()) throw Error("export-ply: prediction length differs for " + files[i].string());
      predictions.insert(predictions.end(), p.labels.begin(), p.labels.end());
    }
    if (!clouds.empty() && c.class_names != clouds.front().class_names) {
      throw Error("export-ply: class tables differ across inputs");
    }
    clouds.push_back(std::move(c));
  }
  const LabeledPointCloud all = clouds.size() == 1 ? clouds.front() : concatenate(clouds);
  std::optional<std::span<const Label>> pred_span;
  if (!preds.empty()) pred_span = std::span<const Label>(predictions);
  export_ply(all, pred_span, colormap, a.out);
  out << "wrote " << all.size() << " points -> " << a.out << "\n";
}

struct CropArgs {
  std::string input, out;
  std::vector<double> lo, hi;
  bool weld = false;
  bool force = false;
};

inline void run_crop_mesh(const CropArgs& a, std::ostream& out) {
  MeshLoadOptions opts;
  opts.weld = a.weld;
  const TriangleMesh mesh = load_mesh(a.input, opts);
  Aabb box;
  box.lo = {a.lo[0], a.lo[1], a.lo[2]};
  box.hi = {a.hi[0], a.hi[1], a.hi[2]};
  if (!(box.lo.x <= box.hi.x && box.lo.y <= box.hi.y && box.lo.z <= box.hi.z)) {
    throw ConfigError("crop-mesh: --min must not exceed --max");
  }
  refuse_existing(a.out, a.force);
  const TriangleMesh cropped = crop_mesh(mesh, box);
  if (cropped.triangles.empty()) throw Error("crop-mesh: no triangle lies fully inside the box");
  save_mesh(cropped, a.out);
  out << "kept " << cropped.triangles.size() << " of " << mesh.triangles.size() << " triangles -> " << a.out << "\n";
}

/// "lidarforge: error: <kind>: <message>" on a single line.
inline void report_error(std::ostream& err, const char* kind, std::string message) {
  std::replace(message.begin(), message.end(), '\n', ' ');
  err << "lidarforge: error: " << kind << ": " << message << "\n";
}

}  // namespace cli

/// Runs the command line. Returns 0 on success, 2 for usage or configuration
/// errors and 1 for runtime failures.
inline int execute(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  using namespace cli;
  CLI::App app{"Synthetic LiDAR dataset forge and annotation toolkit.", "lidarforge"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("lidarforge ") + kVersion);
  std::function<void()> action;

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Simulate scans of randomized scenes into a dataset directory");
  g->add_option("--config", gen.config, "Run config (JSON)")->required();
  g->add_option("--count", gen.count, "Number of clouds (overrides output.count)");
  g->add_option("--seed", gen.seed, "Master seed (overrides output.seed; default 0)");
  g->add_option("--out", gen.out, "Output directory (overrides output.dir)");
  g->add_option("--name", gen.name, "Dataset name recorded in the manifest");
  g->add_option("--workers", gen.workers, "Worker threads (default: LIDARFORGE_WORKERS or hardware threads)");
  g->add_flag("--force", gen.force, "Replace existing outputs");
  g->callback([&] { action = [&] { run_generate(gen, out); }; });

  MixArgs mix;
  auto* m = app.add_subcommand("mix", "Compose a synthetic/real training list with real-side oversampling");
  m->add_option("--synthetic", mix.synthetic, "Synthetic pool: directory of .lpc files")->required();
  m->add_option("--real", mix.real, "Real pool: directory of .lpc files");
  m->add_option("--config", mix.config, "Run config supplying mix.total and mix.synthetic_fraction");
  m->add_option("--total", mix.total, "Total entries (default 10000)");
  m->add_option("--fraction", mix.fraction, "Synthetic fraction in [0, 1] (default 0.5)");
  m->add_option("--seed", mix.seed, "Shuffle seed")->capture_default_str();
  m->add_option("--out", mix.out, "Output list (JSON)")->required();
  m->add_flag("--force", mix.force, "Replace an existing output");
  m->callback([&] { action = [&] { run_mix(mix, out); }; });

  SplitArgs split;
  auto* s = app.add_subcommand("split", "Partition a dataset into train and validation lists");
  s->add_option("--input", split.input, "Dataset directory")->required();
  s->add_option("--val", split.val, "Number of validation files")->required();
  s->add_option("--seed", split.seed, "Shuffle seed")->capture_default_str();
  s->add_option("--out", split.out, "Output lists (JSON)")->required();
  s->add_flag("--force", split.force, "Replace an existing output");
  s->callback([&] { action = [&] { run_split(split, out); }; });

  DownsampleArgs down;
  auto* d = app.add_subcommand("downsample", "Uniformly subsample clouds without replacement");
  d->add_option("--input", down.input, "Input .lpc file or directory")->required();
  d->add_option("--points", down.points, "Points to keep per cloud (overrides downsample.points)");
  d->add_option("--config", down.config, "Run config supplying downsample.points");
  d->add_option("--seed", down.seed, "Sampling seed")->capture_default_str();
  d->add_option("--out", down.out, "Output .lpc file or directory")->required();
  d->add_flag("--force", down.force, "Replace existing outputs");
  d->callback([&] { action = [&] { run_downsample(down, out); }; });

  RegisterArgs reg;
  auto* r = app.add_subcommand("register", "Register a scan sequence with ICP into a trajectory and map");
  r->add_option("--input", reg.input, "Directory of sequence frames (.lpc, sorted by name)")->required();
  r->add_option("--trajectory", reg.trajectory, "Output trajectory (frame tx ty tz qx qy qz qw)")->required();
  r->add_option("--map", reg.map, "Output aggregated map (.lpc)");
  r->add_option("--voxel", reg.icp.voxel_m, "ICP voxel size in m")->capture_default_str();
  r->add_option("--map-voxel", reg.map_voxel, "Voxel size of the output map in m")->capture_default_str();
  r->add_option("--max-correspondence", reg.icp.max_correspondence_m, "Max correspondence distance in m")
      ->capture_default_str();
  r->add_option("--max-iterations", reg.icp.max_iterations, "ICP iteration cap")->capture_default_str();
  r->add_option("--epsilon", reg.icp.epsilon, "Convergence threshold on the pose update")->capture_default_str();
  r->add_option("--seed", reg.icp.ground.seed, "RANSAC seed for ground removal")->capture_default_str();
  r->add_flag("--keep-ground", reg.keep_ground, "Match ground points too (off: each frame's ground plane is dropped)");
  r->add_option("--workers", reg.workers, "Worker threads (default: LIDARFORGE_WORKERS or hardware threads)");
  r->add_flag("--force", reg.force, "Replace existing outputs");
  r->callback([&] { action = [&] { run_register(reg, out); }; });

  ClusterArgs clu;
  auto* c = app.add_subcommand("cluster", "Remove ground and cluster a map; prints the cluster table");
  c->add_option("--map", clu.map, "Map cloud (.lpc)")->required();
  c->add_option("--out", clu.out, "Output cluster cloud (.lpc, label k+1 = cluster k)")->required();
  c->add_option("--linkage", clu.linkage, "Single-linkage distance in m")->capture_default_str();
  c->add_option("--min-size", clu.min_size, "Smallest cluster kept")->capture_default_str();
  c->add_option("--ground", clu.ground, "Ground removal: ransac, z or none")
      ->check(CLI::IsMember({"ransac", "z", "none"}))
      ->capture_default_str();
  c->add_option("--z-threshold", clu.z_threshold, "Ground height threshold in m (z method and fallback)")
      ->capture_default_str();
  c->add_option("--seed", clu.seed, "RANSAC seed")->capture_default_str();
  c->add_option("--assignments-from-labels", clu.assignments_from_labels,
                "Also write a majority-vote assignment file from the map's labels");
  c->add_flag("--force", clu.force, "Replace existing outputs");
  c->callback([&] { action = [&] { run_cluster(clu, out); }; });

  PropagateArgs prop;
  auto* p = app.add_subcommand("propagate", "Label every frame from assigned map clusters");
  p->add_option("--frames", prop.frames, "Directory of sequence frames (.lpc)")->required();
  p->add_option("--trajectory", prop.trajectory, "Trajectory from register")->required();
  p->add_option("--clusters", prop.clusters, "Cluster cloud from cluster")->required();
  p->add_option("--assignments", prop.assignments, "Assignment file (cluster_id class_name per line)");
  p->add_option("--classes", prop.classes, "Comma-separated class names (default: first frame's table)");
  p->add_option("--other", prop.other, "Class for unmatched points")->capture_default_str();
  p->add_option("--radius", prop.radius, "Match radius in m")->capture_default_str();
  p->add_option("--out", prop.out, "Output directory")->required();
  p->add_option("--workers", prop.workers, "Worker threads (default: LIDARFORGE_WORKERS or hardware threads)");
  p->add_flag("--force", prop.force, "Replace existing outputs");
  p->callback([&] { action = [&] { run_propagate(prop, out); }; });

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Per-class IoU and mIoU of predictions against ground truth");
  e->add_option("--gt", ev.gt, "Ground-truth .lpc file or directory")->required();
  e->add_option("--pred", ev.pred, "Prediction .lpc file or directory (paired by file name)")->required();
  e->add_option("--out", ev.out, "Also write the JSON report here");
  e->add_option("--workers", ev.workers, "Worker threads (default: LIDARFORGE_WORKERS or hardware threads)");
  e->callback([&] { action = [&] { run_eval(ev, out); }; });

  ExportArgs ex;
  auto* x = app.add_subcommand("export-ply", "Write class-colored ASCII PLY");
  x->add_option("--input", ex.input, "Cloud .lpc file or directory of frames")->required();
  x->add_option("--pred", ex.pred, "Predictions (.lpc file or directory) used for colors");
  x->add_option("--trajectory", ex.trajectory, "Map frames into frame 0 before export");
  x->add_option("--colormap", ex.colormap, "JSON object mapping class names to [r, g, b]");
  x->add_option("--out", ex.out, "Output .ply")->required();
  x->add_flag("--force", ex.force, "Replace an existing output");
  x->callback([&] { action = [&] { run_export_ply(ex, out); }; });

  CropArgs crop;
  auto* k = app.add_subcommand("crop-mesh", "Keep only triangles fully inside a box");
  k->add_option("--input", crop.input, "Mesh (.ply, .obj or binary .stl)")->required();
  k->add_option("--min", crop.lo, "Box corner x,y,z")->required()->expected(3)->delimiter(',');
  k->add_option("--max", crop.hi, "Box corner x,y,z")->required()->expected(3)->delimiter(',');
  k->add_option("--out", crop.out, "Output mesh; format from extension")->required();
  k->add_flag("--weld", crop.weld, "Weld duplicate vertices on load");
  k->add_flag("--force", crop.force, "Replace an existing output");
  k->callback([&] { action = [&] { run_crop_mesh(crop, out); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex_help) {
    return app.exit(ex_help, out, err);
  } catch (const CLI::CallForAllHelp& ex_help) {
    return app.exit(ex_help, out, err);
  } catch (const CLI::CallForVersion&) {
    out << "lidarforge " << kVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& ex_parse) {
    report_error(err, "usage", ex_parse.what());
    return 2;
  }

  try {
    if (action) action();
    return 0;
  } catch (const ConfigError& ex_cfg) {
    report_error(err, "config", ex_cfg.what());
    return 2;
  } catch (const ParseError& ex_parse) {
    report_error(err, "parse", ex_parse.what());
  } catch (const PlacementError& ex_place) {
    report_error(err, "placement", ex_place.what());
  } catch (const RegistrationError& ex_reg) {
    report_error(err, "registration", ex_reg.what());
  } catch (const std::exception& ex_other) {
    report_error(err, "runtime", ex_other.what());
  }
  return 1;
}

inline int execute(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"lidarforge"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return execute(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace lidarforge
