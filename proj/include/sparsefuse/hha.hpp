#pragma once

#include <array>

#include "sparsefuse/geometry.hpp"

namespace sparsefuse {

struct NormalMap {
  Raster<Eigen::Vector3d> normals;  // camera frame, unit length where valid
  Raster<std::uint8_t> valid;
};

// Per-pixel normals from a PCA plane fit over the 3D neighbours within radius,
// oriented toward the camera. Pixels with invalid depth, fewer than three
// neighbours or a collinear neighbourhood are flagged invalid.
NormalMap estimate_normals(const View& view, double radius);

struct ChannelRange {
  double min = 0;
  double max = 0;
};

struct HHARaster {
  // Raw channels: disparity 1/d (1/m), height above floor (m), angle between
  // normal and up (rad). Invalid pixels hold 0.
  std::array<Raster<double>, 3> raw;
  // Min-max normalized to [0,1] over valid pixels using `ranges`.
  std::array<Raster<double>, 3> normalized;
  std::array<ChannelRange, 3> ranges;
  Raster<std::uint8_t> valid;  // depth valid
  Raster<std::uint8_t> angle_valid;
  double floor_level = 0;
};

inline const Eigen::Vector3d kCameraUp{0.0, -1.0, 0.0};

struct HHAOptions {
  Eigen::Vector3d gravity_up = kCameraUp;  // camera frame, unit length
  double normal_radius = 0.05;             // meters
  double floor_percentile = 0.01;
};

// Geocentric encoding. The floor level is the given percentile of the
// coordinates along gravity_up (nearest rank). Labels are ignored: every
// pixel with valid depth is encoded. Throws InvalidInput when no pixel has a
// valid depth or gravity_up is not unit length.
HHARaster hha_encode(const View& view, const HHAOptions& options = {});

}  // namespace sparsefuse
