#include "sparsefuse/hha.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "sparsefuse/error.hpp"
#include "sparsefuse/kdtree.hpp"

namespace sparsefuse {
namespace {

struct PixelCloud {
  std::vector<Eigen::Vector3d> points;
  std::vector<std::size_t> pixel;  // row-major pixel index of each point
};

PixelCloud valid_points(const View& view) {
  const auto& k = view.intrinsics;
  PixelCloud pc;
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      const float d = view.depth.at(u, v);
      if (!valid_depth(d)) continue;
      pc.points.push_back(unproject_pixel(k, u, v, d));
      pc.pixel.push_back(static_cast<std::size_t>(v) * k.width + u);
    }
  }
  return pc;
}

void normalize(const Raster<double>& raw, const Raster<std::uint8_t>& mask, Raster<double>& out,
               ChannelRange& range) {
  out = Raster<double>(raw.width, raw.height, 0.0);
  bool any = false;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!mask.data[i]) continue;
    if (!any) {
      range = {raw.data[i], raw.data[i]};
      any = true;
    }
    range.min = std::min(range.min, raw.data[i]);
    range.max = std::max(range.max, raw.data[i]);
  }
  const double span = range.max - range.min;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (mask.data[i] && span > 0) out.data[i] = (raw.data[i] - range.min) / span;
  }
}

}  // namespace

NormalMap estimate_normals(const View& view, double radius) {
  view.validate();
  if (!(radius > 0)) throw InvalidInput("normal radius must be positive");
  const auto& k = view.intrinsics;
  NormalMap map{Raster<Eigen::Vector3d>(k.width, k.height, Eigen::Vector3d::Zero()),
                Raster<std::uint8_t>(k.width, k.height, 0)};

  const PixelCloud pc = valid_points(view);
  const KdTree tree{std::span<const Eigen::Vector3d>(pc.points)};
  for (std::size_t i = 0; i < pc.points.size(); ++i) {
    const auto nbrs = tree.radius_search(pc.points[i], radius);
    if (nbrs.size() < 3) continue;
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (auto j : nbrs) mean += pc.points[j];
    mean /= static_cast<double>(nbrs.size());
    Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
    for (auto j : nbrs) {
      const Eigen::Vector3d d = pc.points[j] - mean;
      scatter.noalias() += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(scatter);
    const auto& ev = eig.eigenvalues();
    if (!(ev(1) > 1e-12 * ev(2))) continue;  // collinear or coincident
    Eigen::Vector3d n = eig.eigenvectors().col(0).normalized();
    if (n.dot(pc.points[i]) > 0) n = -n;
    map.normals.data[pc.pixel[i]] = n;
    map.valid.data[pc.pixel[i]] = 1;
  }
  return map;
}

HHARaster hha_encode(const View& view, const HHAOptions& options) {
  view.validate();
  if (!options.gravity_up.allFinite() || std::abs(options.gravity_up.norm() - 1.0) > 1e-6) {
    throw InvalidInput("gravity_up must be a unit vector");
  }
  if (!(options.floor_percentile >= 0 && options.floor_percentile <= 1)) {
    throw InvalidInput("floor percentile must be in [0,1]");
  }
  const auto& k = view.intrinsics;
  const PixelCloud pc = valid_points(view);
  if (pc.points.empty()) throw InvalidInput("HHA encoding needs at least one valid depth pixel");

  const Eigen::Vector3d& up = options.gravity_up;
  std::vector<double> heights;
  heights.reserve(pc.points.size());
  for (const auto& p : pc.points) heights.push_back(p.dot(up));
  std::vector<double> sorted = heights;
  const auto rank = static_cast<std::size_t>(std::floor(options.floor_percentile * static_cast<double>(sorted.size() - 1)));
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank), sorted.end());

  HHARaster out;
  out.floor_level = sorted[rank];
  for (auto& r : out.raw) r = Raster<double>(k.width, k.height, 0.0);
  out.valid = Raster<std::uint8_t>(k.width, k.height, 0);

  const NormalMap normals = estimate_normals(view, options.normal_radius);
  out.angle_valid = normals.valid;

  for (std::size_t i = 0; i < pc.points.size(); ++i) {
    const auto px = pc.pixel[i];
    out.valid.data[px] = 1;
    out.raw[0].data[px] = 1.0 / pc.points[i].z();
    out.raw[1].data[px] = heights[i] - out.floor_level;
    if (normals.valid.data[px]) {
      const double c = std::clamp(normals.normals.data[px].dot(up), -1.0, 1.0);
      out.raw[2].data[px] = std::acos(c);
    }
  }
  normalize(out.raw[0], out.valid, out.normalized[0], out.ranges[0]);
  normalize(out.raw[1], out.valid, out.normalized[1], out.ranges[1]);
  normalize(out.raw[2], out.angle_valid, out.normalized[2], out.ranges[2]);
  return out;
}

}  // namespace sparsefuse
