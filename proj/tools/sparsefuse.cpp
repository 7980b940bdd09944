// Command-line front end: reconstruction, evaluation, HHA encoding and
// synthetic case generation.

#include <cstdio>
#include <fstream>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sparsefuse/config.hpp"
#include "sparsefuse/error.hpp"
#include "sparsefuse/hha.hpp"
#include "sparsefuse/io.hpp"
#include "sparsefuse/metrics.hpp"
#include "sparsefuse/registration.hpp"
#include "sparsefuse/simd/kernels.hpp"
#include "sparsefuse/synth.hpp"

namespace fs = std::filesystem;
using namespace sparsefuse;

namespace {

struct Output {
  std::string report_path;
  bool kv = false;

  void emit(const config::Report& report, const std::string& human) const {
    std::cout << (kv ? report.str() : human);
    if (!report_path.empty()) report.write(report_path);
  }
};

void add_output_flags(CLI::App* cmd, Output& out) {
  cmd->add_option("--report", out.report_path, "Write the key-value report to this file");
  cmd->add_flag("--kv", out.kv, "Print the key-value report instead of the summary");
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

int run_reconstruct(const std::string& manifest_path, const std::string& config_path, const std::string& out_path,
                    const Output& out) {
  const config::RunConfig cfg = config_path.empty() ? config::RunConfig{} : config::read_run_config(config_path);
  const auto manifest = config::read_manifest(manifest_path);
  const auto views = config::load_views(manifest);
  if (cfg.verbosity > 1) std::cerr << "loaded " << views.size() << " views\n";

  FusedScene scene;
  try {
    scene = reconstruct(views, cfg.registration);
  } catch (const PipelineError& e) {
    std::cerr << "sparsefuse: " << e.what() << "\n";
    if (!e.partial().cloud.empty()) {
      const std::string partial = out_path + ".partial.ply";
      io::write_cloud(e.partial().cloud, partial);
      std::cerr << "sparsefuse: partial scene written to " << partial << "\n";
    }
    return 1;
  }
  io::write_cloud(scene.cloud, out_path);

  config::Report report;
  report.add("simd", std::string(simd::isa_name(simd::active_isa())));
  config::add_scene(report, scene);

  std::ostringstream human;
  human << "fused " << scene.per_view_transforms.size() << " views into " << scene.cloud.size() << " points -> "
        << out_path << "\n";
  for (std::size_t i = 0; i < scene.per_view_transforms.size(); ++i) {
    const auto& t = scene.per_view_transforms[i];
    human << "  view " << i << ": rotation " << fmt(t.angle() * 180.0 / 3.141592653589793) << " deg, translation ("
          << fmt(t.translation.x()) << ", " << fmt(t.translation.y()) << ", " << fmt(t.translation.z()) << ")";
    if (i > 0) human << ", " << scene.views[i].correspondences << " correspondences";
    human << "\n";
  }
  out.emit(report, human.str());
  return 0;
}

int run_eval_depth(const std::string& pred_path, const std::string& gt_path, std::vector<double> thresholds,
                   std::optional<double> scale, const Output& out) {
  if (thresholds.empty()) thresholds = kDefaultDeltaThresholds;
  const auto pred = io::read_depth(pred_path, scale);
  const auto gt = io::read_depth(gt_path, scale);
  const auto m = depth_metrics(pred, gt, thresholds);
  config::Report report;
  config::add_depth_metrics(report, m);
  std::ostringstream human;
  human << "depth over " << m.valid_pixels << " pixels: rel=" << fmt(m.rel) << " log10=" << fmt(m.log10)
        << " rms=" << fmt(m.rms);
  for (const auto& d : m.delta) human << " delta<" << fmt(d.threshold) << "=" << fmt(d.fraction);
  human << "\n";
  out.emit(report, human.str());
  return 0;
}

int run_eval_seg(const std::string& pred_path, const std::string& gt_path, std::size_t classes, const Output& out) {
  const auto m = seg_metrics(io::read_labels(pred_path), io::read_labels(gt_path), classes);
  config::Report report;
  config::add_seg_metrics(report, m);
  std::ostringstream human;
  human << "segmentation over " << m.evaluated_pixels << " pixels, " << m.per_class.size()
        << " classes: pixel_acc=" << fmt(m.pixel_acc) << " mean_acc=" << fmt(m.mean_acc) << " iou=" << fmt(m.iou)
        << "\n";
  out.emit(report, human.str());
  return 0;
}

int run_eval_recon(const std::string& recon_path, const std::string& gt_path, double threshold, const Output& out) {
  const auto m = recon_metrics(io::read_cloud(recon_path), io::read_cloud(gt_path), threshold);
  config::Report report;
  config::add_recon_metrics(report, m);
  std::ostringstream human;
  human << "reconstruction: accuracy=" << fmt(m.accuracy) << " completeness=" << fmt(m.completeness)
        << " (threshold " << fmt(m.threshold) << ")\n";
  out.emit(report, human.str());
  return 0;
}

int run_hha(const std::string& manifest_path, std::size_t index, const std::string& out_path,
            const std::vector<double>& up, double radius, bool raw, const Output& out) {
  const auto manifest = config::read_manifest(manifest_path);
  if (index >= manifest.views.size()) {
    throw InvalidInput("manifest has " + std::to_string(manifest.views.size()) + " views; index " +
                       std::to_string(index) + " is out of range");
  }
  const auto& e = manifest.views[index];
  const View view = io::read_rasters(e.paths, e.intrinsics, e.depth_scale);
  HHAOptions opt;
  if (!up.empty()) opt.gravity_up = Eigen::Vector3d(up[0], up[1], up[2]);
  opt.normal_radius = radius;
  const auto hha = hha_encode(view, opt);

  std::array<Raster<float>, 3> channels;
  for (int c = 0; c < 3; ++c) {
    const auto& src = raw ? hha.raw[c] : hha.normalized[c];
    channels[c] = Raster<float>(src.width, src.height);
    for (std::size_t i = 0; i < src.size(); ++i) channels[c].data[i] = static_cast<float>(src.data[i]);
  }
  io::write_pfm_rgb(out_path, channels);

  config::Report report;
  report.add("hha.floor_level", hha.floor_level);
  const char* names[3] = {"disparity", "height", "angle"};
  for (int c = 0; c < 3; ++c) {
    report.add(std::string("hha.") + names[c] + ".min", hha.ranges[c].min);
    report.add(std::string("hha.") + names[c] + ".max", hha.ranges[c].max);
  }
  std::ostringstream human;
  human << "HHA (" << (raw ? "raw" : "normalized") << ") written to " << out_path << "; floor level "
        << fmt(hha.floor_level) << " m\n";
  out.emit(report, human.str());
  return 0;
}

int run_synth(const std::string& scene_path, const std::string& out_dir, const Output& out) {
  const auto cfg = config::read_scene_config(scene_path);
  const auto c = synth::generate_case(cfg.scene, cfg.poses, cfg.intrinsics, cfg.noise, cfg.options);
  fs::create_directories(out_dir);

  config::ViewManifest manifest;
  config::Report report;
  report.add("views", c.views.size());
  for (std::size_t i = 0; i < c.views.size(); ++i) {
    const std::string stem = "view_" + std::to_string(i);
    const auto path = [&](const std::string& suffix) { return (fs::path(out_dir) / (stem + suffix)).string(); };
    io::write_ppm(path("_color.ppm"), c.views[i].color);
    io::write_pfm(path("_depth.pfm"), c.views[i].depth);
    io::write_pfm(path("_depth_clean.pfm"), c.clean_views[i].depth);
    io::write_pgm16(path("_labels.pgm"), c.views[i].labels);
    manifest.views.push_back({{stem + "_color.ppm", stem + "_depth.pfm", stem + "_labels.pgm"}, cfg.intrinsics, {}});
    report.add("view." + std::to_string(i), c.gt_transforms[i]);
    report.add("view." + std::to_string(i) + ".pose", c.poses[i]);
    for (std::size_t j = 0; j < c.views.size(); ++j) {
      if (j != i) report.add("overlap." + std::to_string(i) + "." + std::to_string(j), c.overlap[i][j]);
    }
  }
  report.add("gt_points", c.gt_cloud.size());

  {
    std::ofstream m(fs::path(out_dir) / "manifest.txt", std::ios::binary | std::ios::trunc);
    m << config::format_manifest(manifest);
    if (!m) throw Error("failed writing manifest in " + out_dir);
  }
  io::write_cloud(c.gt_cloud, (fs::path(out_dir) / "gt_cloud.ply").string());
  report.write((fs::path(out_dir) / "ground_truth.txt").string());

  std::ostringstream human;
  human << "rendered " << c.views.size() << " views (" << cfg.intrinsics.width << "x" << cfg.intrinsics.height
        << ") into " << out_dir << "; ground-truth cloud has " << c.gt_cloud.size() << " points\n";
  out.emit(report, human.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic sparse-view reconstruction toolkit"};
  app.require_subcommand(1);
  std::string simd_choice = "auto";
  app.add_option("--simd", simd_choice, "Kernel ISA: auto, scalar or avx2")
      ->check(CLI::IsMember({"auto", "scalar", "avx2"}));

  Output out;

  std::string manifest, config_path, out_path;
  auto* rec = app.add_subcommand("reconstruct", "Register and fuse the views listed in a manifest");
  rec->add_option("manifest", manifest, "View manifest")->required()->check(CLI::ExistingFile);
  rec->add_option("--config", config_path, "Run configuration (key = value)")->check(CLI::ExistingFile);
  rec->add_option("--out", out_path, "Output PLY")->required();
  add_output_flags(rec, out);

  std::string pred, gt;
  std::vector<double> thresholds;
  std::optional<double> depth_scale;
  auto* ed = app.add_subcommand("eval-depth", "Depth error metrics between two depth rasters");
  ed->add_option("pred", pred, "Predicted depth (PFM or PGM)")->required()->check(CLI::ExistingFile);
  ed->add_option("gt", gt, "Ground-truth depth (PFM or PGM)")->required()->check(CLI::ExistingFile);
  ed->add_option("--thresholds", thresholds, "Delta thresholds (default 1.25 1.5625 1.953125)");
  ed->add_option("--scale", depth_scale, "Units per meter for integer depth");
  add_output_flags(ed, out);

  std::size_t classes = 0;
  auto* es = app.add_subcommand("eval-seg", "Segmentation scores between two label rasters");
  es->add_option("pred", pred, "Predicted labels (PGM)")->required()->check(CLI::ExistingFile);
  es->add_option("gt", gt, "Ground-truth labels (PGM)")->required()->check(CLI::ExistingFile);
  es->add_option("--classes", classes, "Number of classes")->required()->check(CLI::PositiveNumber);
  add_output_flags(es, out);

  double threshold = 0;
  auto* er = app.add_subcommand("eval-recon", "Accuracy and completeness of a reconstruction");
  er->add_option("recon", pred, "Reconstructed PLY")->required()->check(CLI::ExistingFile);
  er->add_option("gt", gt, "Ground-truth PLY")->required()->check(CLI::ExistingFile);
  er->add_option("--threshold", threshold, "Completeness distance, in the clouds' units")->required();
  add_output_flags(er, out);

  std::size_t index = 0;
  std::vector<double> up;
  double radius = 0.05;
  bool raw = false;
  auto* hh = app.add_subcommand("hha", "Geocentric HHA encoding of one manifest entry");
  hh->add_option("manifest", manifest, "View manifest")->required()->check(CLI::ExistingFile);
  hh->add_option("--index", index, "Manifest entry (default 0)");
  hh->add_option("--out", out_path, "Output three-channel PFM")->required();
  hh->add_option("--up", up, "Gravity up in camera frame (default 0 -1 0)")->expected(3);
  hh->add_option("--radius", radius, "Normal estimation radius in meters")->check(CLI::PositiveNumber);
  hh->add_flag("--raw", raw, "Write unnormalized channels");
  add_output_flags(hh, out);

  std::string scene_path, out_dir;
  auto* sy = app.add_subcommand("synth", "Render a synthetic case with ground truth");
  sy->add_option("scene", scene_path, "Scene configuration")->required()->check(CLI::ExistingFile);
  sy->add_option("--out-dir", out_dir, "Output directory")->required();
  add_output_flags(sy, out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "sparsefuse: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (simd_choice == "scalar") simd::force_isa(simd::Isa::kScalar);
    if (simd_choice == "avx2") simd::force_isa(simd::Isa::kAvx2);

    if (*rec) return run_reconstruct(manifest, config_path, out_path, out);
    if (*ed) return run_eval_depth(pred, gt, thresholds, depth_scale, out);
    if (*es) return run_eval_seg(pred, gt, classes, out);
    if (*er) return run_eval_recon(pred, gt, threshold, out);
    if (*hh) return run_hha(manifest, index, out_path, up, radius, raw, out);
    if (*sy) return run_synth(scene_path, out_dir, out);
  } catch (const std::exception& e) {
    std::cerr << "sparsefuse: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
