#pragma once

#include <cstdint>
#include <vector>

#include "sparsefuse/geometry.hpp"

namespace sparsefuse::synth {

// World frame follows the camera convention: +y points down, so gravity up
// is -y and the floor sits at room_max.y.

enum class PrimitiveKind { kPlane, kBox };

struct Primitive {
  PrimitiveKind kind = PrimitiveKind::kBox;
  RigidTransform pose;  // local -> world
  // Box: half sizes along local axes. Plane: rectangle half sizes along local
  // x and y (z ignored); the plane's normal is local +z.
  Eigen::Vector3d half_extent = Eigen::Vector3d::Ones();
  Label label = 0;
  Eigen::Vector3d color = Eigen::Vector3d::Constant(0.5);
};

struct SceneSpec {
  Eigen::Vector3d room_min = Eigen::Vector3d::Zero();
  Eigen::Vector3d room_max = Eigen::Vector3d::Ones();
  std::vector<Primitive> primitives;
  std::uint64_t seed = 1;

  void validate() const;
};

inline constexpr Label kFloorLabel = 1;
inline constexpr Label kCeilingLabel = 2;
inline constexpr Label kWallLabel = 3;

// Adds floor, ceiling and four walls spanning the room bounds.
void add_room_shell(SceneSpec& scene);

Primitive make_box(const Eigen::Vector3d& center, const Eigen::Vector3d& half_extent, double yaw, Label label,
                   const Eigen::Vector3d& color);

// Camera-to-world pose of an upright camera at eye looking at target.
RigidTransform look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target);

// Ray-cast render. Pixels that hit nothing keep depth 0 and kUnlabeled.
// Throws InvalidInput when the camera is outside the room or sees nothing.
View render_view(const SceneSpec& scene, const RigidTransform& camera_to_world, const Intrinsics& intr);

struct NoiseSpec {
  double scale_bias = 1.0;
  double warp_amp = 0.0;  // meters
  int warp_cells = 4;
  double pixel_sigma = 0.0;  // meters
  std::uint64_t seed = 0;

  void validate() const;
  bool is_zero() const { return scale_bias == 1.0 && warp_amp == 0.0 && pixel_sigma == 0.0; }
};

// Smooth low-frequency offset field over the image: a uniform cubic B-spline
// surface whose (cells + 3)^2 control values are drawn in [-amp, amp].
class WarpField {
 public:
  WarpField(int width, int height, int cells, double amplitude, std::uint64_t seed);

  double operator()(int u, int v) const;

  int cells() const { return cells_; }
  // Row-major (cells + 3) x (cells + 3) control values; index 0 sits one
  // knot before the image's first row/column.
  const std::vector<double>& control() const { return control_; }

 private:
  int width_, height_, cells_;
  std::vector<double> control_;
};

// depth <- scale_bias * (depth + warp(u, v)) + N(0, pixel_sigma^2); colors and
// labels untouched. Results <= 0 become invalid (0).
View perturb_depth(const View& view, const NoiseSpec& noise);

struct CaseOptions {
  double min_overlap = 0.2;       // required between consecutive views
  double visibility_tol = 0.02;   // meters, depth agreement for co-visibility
  double fuse_voxel = 0.01;
};

struct SynthCase {
  std::vector<View> views;        // noisy
  std::vector<View> clean_views;
  std::vector<RigidTransform> poses;          // camera -> world
  std::vector<RigidTransform> gt_transforms;  // view i -> view 0 frame
  LabeledCloud gt_cloud;                      // clean, fused, view 0 frame
  std::vector<std::vector<double>> overlap;   // overlap[i][j]: share of view i seen by view j
};

// Fraction of view a's valid pixels whose surface point is visible in view b.
double overlap_fraction(const View& a, const RigidTransform& pose_a, const View& b, const RigidTransform& pose_b,
                        double visibility_tol);

// Renders every pose, applies noise (seed offset per view) and emits ground
// truth. Throws InvalidInput for fewer than 2 poses or when a consecutive
// pair overlaps less than options.min_overlap.
SynthCase generate_case(const SceneSpec& scene, const std::vector<RigidTransform>& poses, const Intrinsics& intr,
                        const NoiseSpec& noise, const CaseOptions& options = {});

}  // namespace sparsefuse::synth
