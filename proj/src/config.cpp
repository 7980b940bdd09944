#include <Eigen/Geometry>

#include "sparsefuse/config.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <set>
#include <sstream>

#include "sparsefuse/error.hpp"

namespace sparsefuse::config {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path, "cannot open file");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Typed access to one section's entries with per-line diagnostics.
class Fields {
 public:
  Fields(const Section& s, const std::string& origin) : s_(s), origin_(origin) {}

  void each(const std::function<void(const std::string&, const std::string&, int)>& fn) const {
    for (std::size_t i = 0; i < s_.entries.size(); ++i) fn(s_.entries[i].first, s_.entries[i].second, s_.entry_lines[i]);
  }

  [[noreturn]] void fail(int line, const std::string& what) const {
    throw FormatError(origin_, "line " + std::to_string(line) + ": " + what);
  }

  std::vector<double> numbers(const std::string& key, const std::string& value, int line) const {
    std::vector<double> out;
    std::string v = value;
    for (auto& c : v) {
      if (c == ',') c = ' ';
    }
    std::istringstream is(v);
    for (std::string tok; is >> tok;) {
      double d = 0;
      const auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), d);
      if (ec != std::errc() || end != tok.data() + tok.size() || !std::isfinite(d)) {
        fail(line, "bad number '" + tok + "' for " + key);
      }
      out.push_back(d);
    }
    return out;
  }

  double number(const std::string& key, const std::string& value, int line) const {
    const auto v = numbers(key, value, line);
    if (v.size() != 1) fail(line, key + " expects one number");
    return v[0];
  }

  long integer(const std::string& key, const std::string& value, int line) const {
    const std::string t = trim(value);
    long v = 0;
    const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || end != t.data() + t.size()) fail(line, key + " expects an integer, got '" + value + "'");
    return v;
  }

  std::uint64_t unsigned_integer(const std::string& key, const std::string& value, int line) const {
    const std::string t = trim(value);
    std::uint64_t v = 0;
    const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || end != t.data() + t.size()) fail(line, key + " expects an unsigned integer");
    return v;
  }

  Eigen::Vector3d vec3(const std::string& key, const std::string& value, int line) const {
    const auto v = numbers(key, value, line);
    if (v.size() != 3) fail(line, key + " expects three numbers");
    return {v[0], v[1], v[2]};
  }

  bool boolean(const std::string& key, const std::string& value, int line) const {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    fail(line, key + " expects true or false");
  }

  Intrinsics intrinsics(const std::string& key, const std::string& value, int line) const {
    const auto v = numbers(key, value, line);
    if (v.size() != 6) fail(line, key + " expects fx fy cx cy width height");
    Intrinsics k{v[0], v[1], v[2], v[3], static_cast<int>(v[4]), static_cast<int>(v[5])};
    if (k.width != v[4] || k.height != v[5]) fail(line, "raster size must be integral");
    return k;
  }

 private:
  const Section& s_;
  const std::string& origin_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

std::vector<Section> parse_kv(const std::string& text, const std::string& origin) {
  std::vector<Section> sections(1);
  std::istringstream in(text);
  int line_no = 0;
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) throw FormatError(origin, "line " + std::to_string(line_no) + ": bad section header");
      sections.push_back({trim(line.substr(1, line.size() - 2)), line_no, {}, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError(origin, "line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw FormatError(origin, "line " + std::to_string(line_no) + ": empty key");
    for (const auto& [k, _] : sections.back().entries) {
      if (k == key) throw FormatError(origin, "line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    sections.back().entries.emplace_back(key, value);
    sections.back().entry_lines.push_back(line_no);
  }
  return sections;
}

std::vector<Section> read_kv_file(const std::string& path) { return parse_kv(read_text(path), path); }

ViewManifest read_manifest(const std::string& path) {
  const auto sections = read_kv_file(path);
  const auto base = std::filesystem::path(path).parent_path();
  if (!sections[0].entries.empty()) {
    throw FormatError(path, "line " + std::to_string(sections[0].entry_lines[0]) + ": entries must be inside a [view] section");
  }
  ViewManifest m;
  for (std::size_t i = 1; i < sections.size(); ++i) {
    const auto& s = sections[i];
    if (s.name != "view") throw FormatError(path, "line " + std::to_string(s.line) + ": unknown section [" + s.name + "]");
    Fields f(s, path);
    ViewEntry e;
    bool have_intrinsics = false;
    f.each([&](const std::string& key, const std::string& value, int line) {
      if (key == "color") {
        e.paths.color = resolve(base, value).string();
      } else if (key == "depth") {
        e.paths.depth = resolve(base, value).string();
      } else if (key == "labels") {
        e.paths.labels = resolve(base, value).string();
      } else if (key == "intrinsics") {
        e.intrinsics = f.intrinsics(key, value, line);
        have_intrinsics = true;
      } else if (key == "depth_scale") {
        e.depth_scale = f.number(key, value, line);
        if (!(*e.depth_scale > 0)) f.fail(line, "depth_scale must be positive");
      } else {
        f.fail(line, "unknown manifest key '" + key + "'");
      }
    });
    if (e.paths.color.empty() || e.paths.depth.empty() || e.paths.labels.empty() || !have_intrinsics) {
      throw FormatError(path, "line " + std::to_string(s.line) + ": view needs color, depth, labels and intrinsics");
    }
    try {
      e.intrinsics.validate();
    } catch (const InvalidInput& err) {
      throw FormatError(path, "line " + std::to_string(s.line) + ": " + err.what());
    }
    m.views.push_back(e);
  }
  if (m.views.empty()) throw FormatError(path, "manifest lists no views");
  return m;
}

std::string format_manifest(const ViewManifest& manifest) {
  std::ostringstream os;
  for (const auto& v : manifest.views) {
    const auto& k = v.intrinsics;
    os << "[view]\n"
       << "color = " << v.paths.color << "\n"
       << "depth = " << v.paths.depth << "\n"
       << "labels = " << v.paths.labels << "\n"
       << "intrinsics = " << format_double(k.fx) << ' ' << format_double(k.fy) << ' ' << format_double(k.cx) << ' '
       << format_double(k.cy) << ' ' << k.width << ' ' << k.height << "\n";
    if (v.depth_scale) os << "depth_scale = " << format_double(*v.depth_scale) << "\n";
    os << "\n";
  }
  return os.str();
}

std::vector<View> load_views(const ViewManifest& manifest) {
  std::vector<View> views;
  for (const auto& e : manifest.views) views.push_back(io::read_rasters(e.paths, e.intrinsics, e.depth_scale));
  return views;
}

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
  const auto sections = parse_kv(text, origin);
  if (sections.size() > 1) throw FormatError(origin, "line " + std::to_string(sections[1].line) + ": run configs have no sections");
  RunConfig c;
  auto& r = c.registration;
  Fields f(sections[0], origin);
  f.each([&](const std::string& key, const std::string& value, int line) {
    if (key == "w1") r.w1 = f.number(key, value, line);
    else if (key == "w2") r.w2 = f.number(key, value, line);
    else if (key == "reject_dist") r.reject_dist = f.number(key, value, line);
    else if (key == "max_iters") r.max_iters = static_cast<int>(f.integer(key, value, line));
    else if (key == "trans_eps") r.trans_eps = f.number(key, value, line);
    else if (key == "rot_eps") r.rot_eps = f.number(key, value, line);
    else if (key == "fuse_voxel") r.fuse_voxel = f.number(key, value, line);
    else if (key == "semantic_term") {
      if (value == "indicator") r.semantic_term = simd::SemanticTerm::kIndicator;
      else if (value == "squared_diff") r.semantic_term = simd::SemanticTerm::kSquaredDiff;
      else f.fail(line, "semantic_term must be indicator or squared_diff");
    } else if (key == "coarse_radii") r.coarse_radii = value == "none" ? std::vector<double>{} : f.numbers(key, value, line);
    else if (key == "fine_radii") r.fine_radii = value == "none" ? std::vector<double>{} : f.numbers(key, value, line);
    else if (key == "prefilter") r.prefilter = f.boolean(key, value, line);
    else if (key == "plane_tol") r.plane_tol = f.number(key, value, line);
    else if (key == "min_support_fraction") r.min_support_fraction = f.number(key, value, line);
    else if (key == "isolation_k") r.isolation_k = static_cast<int>(f.integer(key, value, line));
    else if (key == "isolation_radius") r.isolation_radius = f.number(key, value, line);
    else if (key == "max_planes") r.max_planes = static_cast<int>(f.integer(key, value, line));
    else if (key == "ransac_iters") r.ransac_iters = static_cast<int>(f.integer(key, value, line));
    else if (key == "ransac_seed") r.ransac_seed = f.unsigned_integer(key, value, line);
    else if (key == "local_refine") r.local_refine = f.boolean(key, value, line);
    else if (key == "normal_radius") r.normal_radius = f.number(key, value, line);
    else if (key == "min_constraint_ratio") r.min_constraint_ratio = f.number(key, value, line);
    else if (key == "min_label_points") r.min_label_points = static_cast<std::size_t>(f.unsigned_integer(key, value, line));
    else if (key == "recon_threshold") c.recon_threshold = f.number(key, value, line);
    else if (key == "delta_thresholds") c.delta_thresholds = f.numbers(key, value, line);
    else if (key == "verbosity") c.verbosity = static_cast<int>(f.integer(key, value, line));
    else f.fail(line, "unknown config key '" + key + "'");
  });
  try {
    r.validate();
  } catch (const InvalidInput& e) {
    throw FormatError(origin, e.what());
  }
  return c;
}

RunConfig read_run_config(const std::string& path) { return parse_run_config(read_text(path), path); }

SceneConfig parse_scene_config(const std::string& text, const std::string& origin) {
  const auto sections = parse_kv(text, origin);
  SceneConfig c;
  bool shell = true;
  bool have_room = false, have_intrinsics = false;
  {
    Fields f(sections[0], origin);
    f.each([&](const std::string& key, const std::string& value, int line) {
      if (key == "room") {
        const auto v = f.numbers(key, value, line);
        if (v.size() != 6) f.fail(line, "room expects x0 y0 z0 x1 y1 z1");
        c.scene.room_min = {v[0], v[1], v[2]};
        c.scene.room_max = {v[3], v[4], v[5]};
        have_room = true;
      } else if (key == "seed") {
        c.scene.seed = f.unsigned_integer(key, value, line);
      } else if (key == "shell") {
        shell = f.boolean(key, value, line);
      } else if (key == "intrinsics") {
        c.intrinsics = f.intrinsics(key, value, line);
        have_intrinsics = true;
      } else {
        f.fail(line, "unknown scene key '" + key + "'");
      }
    });
  }
  if (!have_room || !have_intrinsics) throw FormatError(origin, "scene config needs room and intrinsics");
  if (shell) synth::add_room_shell(c.scene);

  for (std::size_t i = 1; i < sections.size(); ++i) {
    const auto& s = sections[i];
    Fields f(s, origin);
    std::set<std::string> seen;
    f.each([&](const std::string& key, const std::string&, int) { seen.insert(key); });
    auto require = [&](std::initializer_list<const char*> keys) {
      for (const char* k : keys) {
        if (!seen.count(k)) throw FormatError(origin, "line " + std::to_string(s.line) + ": [" + s.name + "] needs " + k);
      }
    };
    if (s.name == "box") {
      require({"center", "half", "label"});
      Eigen::Vector3d center, half, color(0.5, 0.5, 0.5);
      double yaw = 0;
      Label label = 0;
      f.each([&](const std::string& key, const std::string& value, int line) {
        if (key == "center") center = f.vec3(key, value, line);
        else if (key == "half") half = f.vec3(key, value, line);
        else if (key == "yaw_deg") yaw = f.number(key, value, line) * std::numbers::pi / 180.0;
        else if (key == "label") {
          const long l = f.integer(key, value, line);
          if (l < 0 || l >= kUnlabeled) f.fail(line, "label out of range");
          label = static_cast<Label>(l);
        } else if (key == "color") color = f.vec3(key, value, line);
        else f.fail(line, "unknown box key '" + key + "'");
      });
      c.scene.primitives.push_back(synth::make_box(center, half, yaw, label, color));
    } else if (s.name == "plane") {
      require({"center", "normal", "u_axis", "half", "label"});
      synth::Primitive p;
      p.kind = synth::PrimitiveKind::kPlane;
      Eigen::Vector3d normal, u_axis;
      f.each([&](const std::string& key, const std::string& value, int line) {
        if (key == "center") p.pose.translation = f.vec3(key, value, line);
        else if (key == "normal") normal = f.vec3(key, value, line).normalized();
        else if (key == "u_axis") u_axis = f.vec3(key, value, line).normalized();
        else if (key == "half") {
          const auto v = f.numbers(key, value, line);
          if (v.size() != 2) f.fail(line, "plane half expects two numbers");
          p.half_extent = {v[0], v[1], 0.0};
        } else if (key == "label") {
          const long l = f.integer(key, value, line);
          if (l < 0 || l >= kUnlabeled) f.fail(line, "label out of range");
          p.label = static_cast<Label>(l);
        } else if (key == "color") p.color = f.vec3(key, value, line);
        else f.fail(line, "unknown plane key '" + key + "'");
      });
      if (std::abs(normal.dot(u_axis)) > 1e-9) throw FormatError(origin, "line " + std::to_string(s.line) + ": u_axis must be perpendicular to normal");
      p.pose.rotation.col(0) = u_axis;
      p.pose.rotation.col(1) = normal.cross(u_axis);
      p.pose.rotation.col(2) = normal;
      c.scene.primitives.push_back(p);
    } else if (s.name == "camera") {
      require({"eye", "target"});
      Eigen::Vector3d eye, target;
      f.each([&](const std::string& key, const std::string& value, int line) {
        if (key == "eye") eye = f.vec3(key, value, line);
        else if (key == "target") target = f.vec3(key, value, line);
        else f.fail(line, "unknown camera key '" + key + "'");
      });
      c.poses.push_back(synth::look_at(eye, target));
    } else if (s.name == "noise") {
      f.each([&](const std::string& key, const std::string& value, int line) {
        if (key == "scale_bias") c.noise.scale_bias = f.number(key, value, line);
        else if (key == "warp_amp") c.noise.warp_amp = f.number(key, value, line);
        else if (key == "warp_cells") c.noise.warp_cells = static_cast<int>(f.integer(key, value, line));
        else if (key == "pixel_sigma") c.noise.pixel_sigma = f.number(key, value, line);
        else if (key == "seed") c.noise.seed = f.unsigned_integer(key, value, line);
        else f.fail(line, "unknown noise key '" + key + "'");
      });
    } else if (s.name == "case") {
      f.each([&](const std::string& key, const std::string& value, int line) {
        if (key == "min_overlap") c.options.min_overlap = f.number(key, value, line);
        else if (key == "visibility_tol") c.options.visibility_tol = f.number(key, value, line);
        else if (key == "fuse_voxel") c.options.fuse_voxel = f.number(key, value, line);
        else f.fail(line, "unknown case key '" + key + "'");
      });
    } else {
      throw FormatError(origin, "line " + std::to_string(s.line) + ": unknown section [" + s.name + "]");
    }
  }
  try {
    c.scene.validate();
    c.intrinsics.validate();
    c.noise.validate();
  } catch (const InvalidInput& e) {
    throw FormatError(origin, e.what());
  }
  return c;
}

SceneConfig read_scene_config(const std::string& path) { return parse_scene_config(read_text(path), path); }

// ---------------------------------------------------------------------------
// Reports

std::string format_double(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, end);
}

void Report::add(const std::string& key, const std::string& value) { entries_.emplace_back(key, value); }
void Report::add(const std::string& key, double value) { add(key, format_double(value)); }
void Report::add(const std::string& key, std::size_t value) { add(key, std::to_string(value)); }

void Report::add(const std::string& key, const Eigen::Vector3d& v) {
  add(key, format_double(v.x()) + " " + format_double(v.y()) + " " + format_double(v.z()));
}

void Report::add(const std::string& key, const RigidTransform& t) {
  std::string rot;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) rot += (rot.empty() ? "" : " ") + format_double(t.rotation(r, c));
  }
  add(key + ".rotation", rot);
  add(key + ".translation", t.translation);
}

std::string Report::str() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " " + v + "\n";
  return out;
}

void Report::write(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << str();
  if (!out) throw Error("failed writing " + path);
}

void add_depth_metrics(Report& r, const DepthMetrics& m) {
  r.add("depth.valid_pixels", m.valid_pixels);
  r.add("depth.rel", m.rel);
  r.add("depth.log10", m.log10);
  r.add("depth.rms", m.rms);
  for (const auto& d : m.delta) r.add("depth.delta<" + format_double(d.threshold), d.fraction);
}

void add_seg_metrics(Report& r, const SegMetrics& m) {
  r.add("seg.evaluated_pixels", m.evaluated_pixels);
  r.add("seg.pixel_acc", m.pixel_acc);
  r.add("seg.mean_acc", m.mean_acc);
  r.add("seg.iou", m.iou);
  for (const auto& c : m.per_class) {
    const std::string k = "seg.class." + std::to_string(c.label);
    r.add(k + ".support", c.support);
    r.add(k + ".accuracy", c.accuracy);
    r.add(k + ".iou", c.iou);
  }
}

void add_recon_metrics(Report& r, const ReconMetrics& m) {
  r.add("recon.threshold", m.threshold);
  r.add("recon.accuracy", m.accuracy);
  r.add("recon.completeness", m.completeness);
}

void add_scene(Report& r, const FusedScene& scene) {
  r.add("views", scene.per_view_transforms.size());
  r.add("points", scene.cloud.size());
  for (std::size_t i = 0; i < scene.per_view_transforms.size(); ++i) {
    const std::string k = "view." + std::to_string(i);
    r.add(k, scene.per_view_transforms[i]);
    if (i < scene.views.size()) {
      const auto& v = scene.views[i];
      r.add(k + ".input_points", v.input_points);
      r.add(k + ".filtered_points", v.filtered_points);
      r.add(k + ".correspondences", v.correspondences);
      for (std::size_t s = 0; s < v.stages.size(); ++s) {
        const auto& st = v.stages[s];
        r.add(k + ".stage." + std::to_string(s),
              format_double(st.radius) + " " + std::to_string(st.iterations) + " " + (st.converged ? "converged" : "capped") +
                  " " + std::to_string(st.correspondences));
      }
      for (const auto& l : v.local) {
        const std::string lk = k + ".local." + std::to_string(l.label);
        r.add(lk + ".status", to_string(l.status));
        r.add(lk, l.transform);
      }
    }
  }
}

std::map<std::string, std::string> read_report(const std::string& path) {
  std::istringstream in(read_text(path));
  std::map<std::string, std::string> out;
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.empty()) continue;
    const auto sp = line.find(' ');
    if (sp == std::string::npos) throw FormatError(path, "line " + std::to_string(line_no) + ": expected 'key value'");
    out[line.substr(0, sp)] = line.substr(sp + 1);
  }
  return out;
}

RigidTransform transform_from_report(const std::map<std::string, std::string>& report, const std::string& prefix) {
  auto values = [&](const std::string& key, std::size_t n) {
    const auto it = report.find(key);
    if (it == report.end()) throw InvalidInput("report lacks " + key);
    std::istringstream is(it->second);
    std::vector<double> v;
    for (std::string tok; is >> tok;) {
      double d = 0;
      const auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), d);
      if (ec != std::errc() || end != tok.data() + tok.size()) throw InvalidInput("bad number in " + key);
      v.push_back(d);
    }
    if (v.size() != n) throw InvalidInput(key + " has the wrong arity");
    return v;
  };
  const auto rot = values(prefix + ".rotation", 9);
  const auto tr = values(prefix + ".translation", 3);
  RigidTransform t;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) t.rotation(r, c) = rot[3 * r + c];
  }
  t.translation = {tr[0], tr[1], tr[2]};
  return t;
}

}  // namespace sparsefuse::config
