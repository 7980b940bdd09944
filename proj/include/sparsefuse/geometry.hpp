#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace sparsefuse {

using Label = std::uint16_t;
inline constexpr Label kUnlabeled = 65535;

// Row-major H x W grid.
template <typename T>
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Raster() = default;
  Raster(int w, int h, const T& fill = T{})
      : width(w), height(h), data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

  T& at(int u, int v) { return data[static_cast<std::size_t>(v) * width + u]; }
  const T& at(int u, int v) const { return data[static_cast<std::size_t>(v) * width + u]; }
  std::size_t size() const { return data.size(); }
  bool same_shape(int w, int h) const { return width == w && height == h; }
};

using DepthRaster = Raster<float>;
using LabelRaster = Raster<Label>;
using ColorRaster = Raster<Eigen::Vector3f>;

struct Intrinsics {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;

  // Throws InvalidInput when the fields violate the pinhole invariants.
  void validate() const;
};

// One sparse view: normalized color, metric depth (<= 0 or non-finite means
// no measurement) and semantic labels, all sharing the intrinsics' shape.
struct View {
  ColorRaster color;
  DepthRaster depth;
  LabelRaster labels;
  Intrinsics intrinsics;

  void validate() const;
};

inline bool valid_depth(float d) { return d > 0.0f && d < std::numeric_limits<float>::infinity(); }

struct LabeledPoint {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d color = Eigen::Vector3d::Zero();  // rgb in [0,1]
  Label label = 0;

  bool operator==(const LabeledPoint&) const = default;
};

using LabeledCloud = std::vector<LabeledPoint>;

struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static RigidTransform identity() { return {}; }
  static RigidTransform from_axis_angle(const Eigen::Vector3d& axis, double angle,
                                        const Eigen::Vector3d& translation = Eigen::Vector3d::Zero());

  Eigen::Vector3d operator()(const Eigen::Vector3d& p) const { return rotation * p + translation; }
  // (a * b)(p) == a(b(p))
  RigidTransform operator*(const RigidTransform& other) const;
  RigidTransform inverse() const;

  // Geodesic rotation angle in radians, stable near zero.
  double angle() const;
  bool is_proper(double tol = 1e-9) const;
};

// Rotation angle between two transforms and the distance between their
// translations.
struct PoseError {
  double rotation_rad = 0;
  double translation = 0;
};
PoseError pose_error(const RigidTransform& estimate, const RigidTransform& truth);

struct PointPair {
  Eigen::Vector3d source;
  Eigen::Vector3d target;
};

// One labeled point per pixel with valid depth and a label other than
// kUnlabeled, in row-major pixel order. Camera frame is x right, y down,
// z along the optical axis.
LabeledCloud unproject(const View& view);

Eigen::Vector3d unproject_pixel(const Intrinsics& k, double u, double v, double depth);
Eigen::Vector2d project(const Intrinsics& k, const Eigen::Vector3d& p);

LabeledCloud apply_transform(const LabeledCloud& cloud, const RigidTransform& t);

// Closed-form minimizer of 1/2 sum |target - R source - t|^2 (centroid
// alignment + SVD of the cross-covariance, reflection corrected). Throws
// DegenerateGeometry for fewer than 3 pairs or a collinear/coincident source.
RigidTransform solve_rigid(std::span<const PointPair> pairs);

// 1/2 sum |target - R source - t|^2
double rigid_objective(std::span<const PointPair> pairs, const RigidTransform& t);

}  // namespace sparsefuse
