#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sparsefuse/io.hpp"
#include "sparsefuse/metrics.hpp"
#include "sparsefuse/registration.hpp"
#include "sparsefuse/synth.hpp"

namespace sparsefuse::config {

// Plain-text `key = value` files. `#` starts a comment, `[name]` opens a
// section; entries before the first header belong to an unnamed section.
struct Section {
  std::string name;
  int line = 0;
  std::vector<std::pair<std::string, std::string>> entries;
  std::vector<int> entry_lines;
};

std::vector<Section> parse_kv(const std::string& text, const std::string& origin);
std::vector<Section> read_kv_file(const std::string& path);

struct ViewEntry {
  io::RasterPaths paths;  // resolved against the manifest's directory
  Intrinsics intrinsics;
  std::optional<double> depth_scale;
};

// One `[view]` section per view, in order:
//   color = c.ppm / depth = d.pfm / labels = l.pgm
//   intrinsics = fx fy cx cy width height
//   depth_scale = 1000   (optional, required for PGM depth)
struct ViewManifest {
  std::vector<ViewEntry> views;
};

ViewManifest read_manifest(const std::string& path);
std::string format_manifest(const ViewManifest& manifest);
std::vector<View> load_views(const ViewManifest& manifest);

struct RunConfig {
  RegistrationParams registration;
  double recon_threshold = 0.1;
  std::vector<double> delta_thresholds = kDefaultDeltaThresholds;
  int verbosity = 1;
};

// Every key is optional and defaults to RunConfig{}; unknown keys are errors.
RunConfig read_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& text, const std::string& origin);

struct SceneConfig {
  synth::SceneSpec scene;
  std::vector<RigidTransform> poses;
  Intrinsics intrinsics;
  synth::NoiseSpec noise;
  synth::CaseOptions options;
};

// Top level: room = x0 y0 z0 x1 y1 z1, seed, shell (true/false),
// intrinsics = fx fy cx cy width height. Sections: [box] center half yaw_deg
// label color; [plane] center normal u_axis half label color; [camera] eye
// target; [noise] scale_bias warp_amp warp_cells pixel_sigma seed; [case]
// min_overlap visibility_tol fuse_voxel.
SceneConfig read_scene_config(const std::string& path);
SceneConfig parse_scene_config(const std::string& text, const std::string& origin);

// Line-oriented `key value` report.
class Report {
 public:
  void add(const std::string& key, const std::string& value);
  void add(const std::string& key, double value);
  void add(const std::string& key, std::size_t value);
  void add(const std::string& key, const Eigen::Vector3d& v);
  void add(const std::string& key, const RigidTransform& t);  // key.rotation (9, row-major) + key.translation

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
  std::string str() const;
  void write(const std::string& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

// Shortest round-tripping decimal form.
std::string format_double(double v);

void add_depth_metrics(Report& r, const DepthMetrics& m);
void add_seg_metrics(Report& r, const SegMetrics& m);
void add_recon_metrics(Report& r, const ReconMetrics& m);
void add_scene(Report& r, const FusedScene& scene);

// Reads `<prefix>.rotation` / `<prefix>.translation` back out of a report.
std::map<std::string, std::string> read_report(const std::string& path);
RigidTransform transform_from_report(const std::map<std::string, std::string>& report, const std::string& prefix);

}  // namespace sparsefuse::config
