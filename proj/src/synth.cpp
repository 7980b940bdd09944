#include <Eigen/Geometry>

#include "sparsefuse/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>

#include "random.hpp"
#include "sparsefuse/error.hpp"
#include "sparsefuse/registration.hpp"

namespace sparsefuse::synth {
namespace {

constexpr double kHitEps = 1e-9;
constexpr double kBoundsTol = 1e-9;

Primitive make_plane(const Eigen::Vector3d& center, const Eigen::Vector3d& normal, const Eigen::Vector3d& u_axis,
                     double half_u, double half_v, Label label, const Eigen::Vector3d& color) {
  Primitive p;
  p.kind = PrimitiveKind::kPlane;
  p.pose.rotation.col(0) = u_axis;
  p.pose.rotation.col(2) = normal;
  p.pose.rotation.col(1) = normal.cross(u_axis);
  p.pose.translation = center;
  p.half_extent = {half_u, half_v, 0.0};
  p.label = label;
  p.color = color;
  return p;
}

std::vector<Eigen::Vector3d> corners(const Primitive& p) {
  std::vector<Eigen::Vector3d> out;
  const double zs = p.kind == PrimitiveKind::kBox ? 1.0 : 0.0;
  for (int i = 0; i < 8; ++i) {
    const Eigen::Vector3d local((i & 1 ? 1 : -1) * p.half_extent.x(), (i & 2 ? 1 : -1) * p.half_extent.y(),
                                (i & 4 ? 1 : -1) * p.half_extent.z() * zs);
    out.push_back(p.pose(local));
  }
  return out;
}

struct Hit {
  double t;
  std::size_t primitive;
  Eigen::Vector3d local;         // hit point in primitive frame
  Eigen::Vector3d world_normal;  // facing the ray origin
};

// Ray o + t d with t measured so that camera-frame depth equals t.
std::optional<Hit> intersect(const Primitive& prim, std::size_t index, const Eigen::Vector3d& o,
                             const Eigen::Vector3d& d) {
  const Eigen::Matrix3d rt = prim.pose.rotation.transpose();
  const Eigen::Vector3d ol = rt * (o - prim.pose.translation);
  const Eigen::Vector3d dl = rt * d;
  const Eigen::Vector3d& h = prim.half_extent;

  if (prim.kind == PrimitiveKind::kPlane) {
    if (dl.z() == 0) return std::nullopt;
    const double t = -ol.z() / dl.z();
    if (!(t > kHitEps)) return std::nullopt;
    const Eigen::Vector3d p = ol + t * dl;
    if (std::abs(p.x()) > h.x() || std::abs(p.y()) > h.y()) return std::nullopt;
    Eigen::Vector3d n = prim.pose.rotation.col(2);
    if (n.dot(d) > 0) n = -n;
    return Hit{t, index, p, n};
  }

  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  int axis = -1;
  double sign = 0;
  for (int a = 0; a < 3; ++a) {
    if (dl[a] == 0) {
      if (std::abs(ol[a]) > h[a]) return std::nullopt;
      continue;
    }
    double t0 = (-h[a] - ol[a]) / dl[a];
    double t1 = (h[a] - ol[a]) / dl[a];
    double s = -1;
    if (t0 > t1) {
      std::swap(t0, t1);
      s = 1;
    }
    if (t0 > t_near) {
      t_near = t0;
      axis = a;
      sign = s;
    }
    t_far = std::min(t_far, t1);
  }
  // A camera inside a box sees nothing of it.
  if (axis < 0 || t_near > t_far || !(t_near > kHitEps)) return std::nullopt;
  Eigen::Vector3d nl = Eigen::Vector3d::Zero();
  nl[axis] = sign;
  return Hit{t_near, index, ol + t_near * dl, prim.pose.rotation * nl};
}

struct Texture {
  double phase[3];
  double freq[3];
};

std::vector<Texture> textures(const SceneSpec& scene) {
  std::vector<Texture> out;
  for (std::size_t i = 0; i < scene.primitives.size(); ++i) {
    std::mt19937_64 rng(detail::mix_seed(scene.seed, i));
    Texture t;
    for (int a = 0; a < 3; ++a) {
      t.phase[a] = detail::uniform(rng, 0.0, 2.0 * std::numbers::pi);
      t.freq[a] = 2.0 * std::numbers::pi / detail::uniform(rng, 0.25, 0.6);
    }
    out.push_back(t);
  }
  return out;
}

float quantize8(double c) { return static_cast<float>(std::round(std::clamp(c, 0.0, 1.0) * 255.0) / 255.0); }

// Uniform cubic B-spline basis.
void bspline_basis(double t, double b[4]) {
  const double t2 = t * t, t3 = t2 * t;
  b[0] = (1 - t) * (1 - t) * (1 - t) / 6.0;
  b[1] = (3 * t3 - 6 * t2 + 4) / 6.0;
  b[2] = (-3 * t3 + 3 * t2 + 3 * t + 1) / 6.0;
  b[3] = t3 / 6.0;
}

void knot_position(int x, int extent, int cells, int& cell, double& frac) {
  const double s = extent > 1 ? static_cast<double>(x) / (extent - 1) * cells : 0.0;
  cell = std::min(static_cast<int>(std::floor(s)), cells - 1);
  frac = s - cell;
}

}  // namespace

void SceneSpec::validate() const {
  if (!room_min.allFinite() || !room_max.allFinite() || (room_max - room_min).minCoeff() <= 0) {
    throw InvalidInput("room extents must be finite with max > min on every axis");
  }
  for (std::size_t i = 0; i < primitives.size(); ++i) {
    const auto& p = primitives[i];
    if (!p.pose.is_proper(1e-6)) throw InvalidInput("primitive " + std::to_string(i) + " has an improper pose");
    if ((p.half_extent.array() < 0).any()) throw InvalidInput("primitive " + std::to_string(i) + " has negative size");
    if (p.label == kUnlabeled) throw InvalidInput("primitive " + std::to_string(i) + " uses the unlabeled id");
    for (const auto& c : corners(p)) {
      if ((c.array() < room_min.array() - kBoundsTol).any() || (c.array() > room_max.array() + kBoundsTol).any()) {
        throw InvalidInput("primitive " + std::to_string(i) + " extends outside the room");
      }
    }
  }
}

void add_room_shell(SceneSpec& scene) {
  const Eigen::Vector3d lo = scene.room_min, hi = scene.room_max;
  const Eigen::Vector3d mid = 0.5 * (lo + hi);
  const Eigen::Vector3d half = 0.5 * (hi - lo);
  const Eigen::Vector3d ex(1, 0, 0), ey(0, 1, 0), ez(0, 0, 1);
  auto& prims = scene.primitives;
  prims.push_back(make_plane({mid.x(), hi.y(), mid.z()}, -ey, ex, half.x(), half.z(), kFloorLabel, {0.55, 0.45, 0.35}));
  prims.push_back(make_plane({mid.x(), lo.y(), mid.z()}, ey, ex, half.x(), half.z(), kCeilingLabel, {0.9, 0.9, 0.88}));
  prims.push_back(make_plane({lo.x(), mid.y(), mid.z()}, ex, ez, half.z(), half.y(), kWallLabel, {0.75, 0.72, 0.6}));
  prims.push_back(make_plane({hi.x(), mid.y(), mid.z()}, -ex, ez, half.z(), half.y(), kWallLabel, {0.7, 0.75, 0.65}));
  prims.push_back(make_plane({mid.x(), mid.y(), lo.z()}, ez, ex, half.x(), half.y(), kWallLabel, {0.72, 0.7, 0.75}));
  prims.push_back(make_plane({mid.x(), mid.y(), hi.z()}, -ez, ex, half.x(), half.y(), kWallLabel, {0.68, 0.7, 0.72}));
}

Primitive make_box(const Eigen::Vector3d& center, const Eigen::Vector3d& half_extent, double yaw, Label label,
                   const Eigen::Vector3d& color) {
  Primitive p;
  p.kind = PrimitiveKind::kBox;
  p.pose = RigidTransform::from_axis_angle(Eigen::Vector3d::UnitY(), yaw, center);
  p.half_extent = half_extent;
  p.label = label;
  p.color = color;
  return p;
}

RigidTransform look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target) {
  const Eigen::Vector3d z = (target - eye).normalized();
  const Eigen::Vector3d down(0, 1, 0);
  Eigen::Vector3d x = down.cross(z);
  if (x.norm() < 1e-9) throw InvalidInput("look_at direction is parallel to gravity");
  x.normalize();
  const Eigen::Vector3d y = z.cross(x);
  RigidTransform t;
  t.rotation.col(0) = x;
  t.rotation.col(1) = y;
  t.rotation.col(2) = z;
  t.translation = eye;
  return t;
}

View render_view(const SceneSpec& scene, const RigidTransform& camera_to_world, const Intrinsics& intr) {
  scene.validate();
  intr.validate();
  if (!camera_to_world.is_proper(1e-6)) throw InvalidInput("camera pose is not a proper rigid transform");
  const Eigen::Vector3d& o = camera_to_world.translation;
  if ((o.array() <= scene.room_min.array()).any() || (o.array() >= scene.room_max.array()).any()) {
    throw InvalidInput("camera is outside the room");
  }

  View view;
  view.intrinsics = intr;
  view.color = ColorRaster(intr.width, intr.height, Eigen::Vector3f::Zero());
  view.depth = DepthRaster(intr.width, intr.height, 0.0f);
  view.labels = LabelRaster(intr.width, intr.height, kUnlabeled);

  const auto tex = textures(scene);
  const Eigen::Vector3d light = Eigen::Vector3d(0.3, -1.0, -0.4).normalized();
  std::size_t hits = 0;
  for (int v = 0; v < intr.height; ++v) {
    for (int u = 0; u < intr.width; ++u) {
      const Eigen::Vector3d dir_cam((u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0);
      const Eigen::Vector3d dir = camera_to_world.rotation * dir_cam;
      std::optional<Hit> best;
      for (std::size_t i = 0; i < scene.primitives.size(); ++i) {
        const auto h = intersect(scene.primitives[i], i, o, dir);
        if (h && (!best || h->t < best->t)) best = h;
      }
      if (!best) continue;
      const auto& prim = scene.primitives[best->primitive];
      const auto& tx = tex[best->primitive];
      double pattern = 1.0;
      for (int a = 0; a < 3; ++a) pattern += 0.08 * std::sin(tx.freq[a] * best->local[a] + tx.phase[a]);
      const double shade = 0.35 + 0.65 * std::max(0.0, best->world_normal.dot(light));
      const Eigen::Vector3d rgb = prim.color * shade * pattern;
      view.depth.at(u, v) = static_cast<float>(best->t);
      view.labels.at(u, v) = prim.label;
      view.color.at(u, v) = {quantize8(rgb.x()), quantize8(rgb.y()), quantize8(rgb.z())};
      ++hits;
    }
  }
  if (hits == 0) throw InvalidInput("rendered view contains no surface");
  return view;
}

void NoiseSpec::validate() const {
  if (!(scale_bias > 0) || !std::isfinite(scale_bias)) throw InvalidInput("scale_bias must be positive");
  if (!(warp_amp >= 0) || !std::isfinite(warp_amp)) throw InvalidInput("warp_amp must be >= 0");
  if (!(pixel_sigma >= 0) || !std::isfinite(pixel_sigma)) throw InvalidInput("pixel_sigma must be >= 0");
  if (warp_cells < 1) throw InvalidInput("warp_cells must be >= 1");
}

WarpField::WarpField(int width, int height, int cells, double amplitude, std::uint64_t seed)
    : width_(width), height_(height), cells_(cells) {
  if (cells < 1) throw InvalidInput("warp_cells must be >= 1");
  const auto n = static_cast<std::size_t>(cells + 3);
  control_.resize(n * n, 0.0);
  if (amplitude > 0) {
    std::mt19937_64 rng(detail::mix_seed(seed, 0x7a3f));
    for (auto& c : control_) c = detail::uniform(rng, -amplitude, amplitude);
  }
}

double WarpField::operator()(int u, int v) const {
  int cu, cv;
  double fu, fv;
  knot_position(u, width_, cells_, cu, fu);
  knot_position(v, height_, cells_, cv, fv);
  double bu[4], bv[4];
  bspline_basis(fu, bu);
  bspline_basis(fv, bv);
  const int stride = cells_ + 3;
  double sum = 0;
  for (int j = 0; j < 4; ++j) {
    double row = 0;
    for (int i = 0; i < 4; ++i) row += bu[i] * control_[static_cast<std::size_t>(cv + j) * stride + cu + i];
    sum += bv[j] * row;
  }
  return sum;
}

View perturb_depth(const View& view, const NoiseSpec& noise) {
  view.validate();
  noise.validate();
  View out = view;
  const int w = view.intrinsics.width, h = view.intrinsics.height;
  const WarpField warp(w, h, noise.warp_cells, noise.warp_amp, noise.seed);
  std::mt19937_64 rng(detail::mix_seed(noise.seed, 0x9a55));
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const float d = view.depth.at(u, v);
      if (!valid_depth(d)) continue;
      double z = noise.scale_bias * (static_cast<double>(d) + warp(u, v));
      if (noise.pixel_sigma > 0) z += noise.pixel_sigma * detail::gaussian(rng);
      out.depth.at(u, v) = z > 0 ? static_cast<float>(z) : 0.0f;
    }
  }
  return out;
}

double overlap_fraction(const View& a, const RigidTransform& pose_a, const View& b, const RigidTransform& pose_b,
                        double visibility_tol) {
  const RigidTransform a_to_b = pose_b.inverse() * pose_a;
  const auto& ka = a.intrinsics;
  const auto& kb = b.intrinsics;
  std::size_t total = 0, seen = 0;
  for (int v = 0; v < ka.height; ++v) {
    for (int u = 0; u < ka.width; ++u) {
      const float d = a.depth.at(u, v);
      if (!valid_depth(d)) continue;
      ++total;
      const Eigen::Vector3d p = a_to_b(unproject_pixel(ka, u, v, d));
      if (!(p.z() > 0)) continue;
      const Eigen::Vector2d px = project(kb, p);
      const long ub = std::lround(px.x()), vb = std::lround(px.y());
      if (ub < 0 || vb < 0 || ub >= kb.width || vb >= kb.height) continue;
      const float db = b.depth.at(static_cast<int>(ub), static_cast<int>(vb));
      if (valid_depth(db) && std::abs(static_cast<double>(db) - p.z()) <= visibility_tol) ++seen;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(seen) / static_cast<double>(total);
}

SynthCase generate_case(const SceneSpec& scene, const std::vector<RigidTransform>& poses, const Intrinsics& intr,
                        const NoiseSpec& noise, const CaseOptions& options) {
  if (poses.size() < 2) throw InvalidInput("a synthetic case needs at least 2 poses");
  noise.validate();

  SynthCase c;
  c.poses = poses;
  for (const auto& pose : poses) c.clean_views.push_back(render_view(scene, pose, intr));

  const std::size_t n = poses.size();
  c.overlap.assign(n, std::vector<double>(n, 1.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) {
        c.overlap[i][j] = overlap_fraction(c.clean_views[i], poses[i], c.clean_views[j], poses[j], options.visibility_tol);
      }
    }
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (std::min(c.overlap[i][i + 1], c.overlap[i + 1][i]) < options.min_overlap) {
      std::ostringstream os;
      os << "consecutive views overlap less than " << options.min_overlap << "; overlap fractions:";
      for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
          if (a != b) os << " (" << a << "->" << b << ")=" << c.overlap[a][b];
        }
      }
      throw InvalidInput(os.str());
    }
  }

  std::vector<LabeledCloud> placed;
  for (std::size_t i = 0; i < n; ++i) {
    NoiseSpec per_view = noise;
    per_view.seed = detail::mix_seed(noise.seed, i);
    c.views.push_back(noise.is_zero() ? c.clean_views[i] : perturb_depth(c.clean_views[i], per_view));
    c.gt_transforms.push_back(poses[0].inverse() * poses[i]);
    placed.push_back(apply_transform(unproject(c.clean_views[i]), c.gt_transforms.back()));
  }
  c.gt_cloud = fuse(placed, options.fuse_voxel);
  return c;
}

}  // namespace sparsefuse::synth
