#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "sparsefuse/geometry.hpp"
#include "sparsefuse/simd/kernels.hpp"

namespace sparsefuse {

// Static 3D k-d tree over a labeled cloud. Leaves keep their points in
// contiguous structure-of-arrays blocks so the distance kernels can sweep
// them. All searches are exact and break ties toward the lowest original
// index, so results match a brute-force scan point for point.
class KdTree {
 public:
  static constexpr std::size_t kLeafSize = 32;

  struct Neighbor {
    std::size_t index;
    double dist_sq;
  };

  struct LiftedMatch {
    std::size_t index;
    double geom_sq;
    double cost;
  };

  KdTree() = default;
  explicit KdTree(const LabeledCloud& cloud);
  explicit KdTree(std::span<const Eigen::Vector3d> positions);

  std::size_t size() const { return index_.size(); }
  bool empty() const { return index_.empty(); }

  std::optional<Neighbor> nearest(const Eigen::Vector3d& q) const;

  // Minimizer of the lifted cost among points with geometric squared
  // distance <= max_geom_sq.
  std::optional<LiftedMatch> nearest_lifted(const simd::LiftedQuery& q, const simd::LiftedWeights& w,
                                            double max_geom_sq) const;

  // Number of points within radius (inclusive), stopping early at limit.
  std::size_t count_within(const Eigen::Vector3d& q, double radius, std::size_t limit) const;

  // Original indices of all points within radius (inclusive), ascending.
  std::vector<std::size_t> radius_search(const Eigen::Vector3d& q, double radius) const;

 private:
  struct Node {
    double lo[3];
    double hi[3];
    std::uint32_t begin, end;
    std::int32_t left = -1, right = -1;
    bool leaf() const { return left < 0; }
  };

  void build(std::vector<Eigen::Vector3d> pos, std::vector<Eigen::Vector3d> rgb,
             std::vector<std::int32_t> labels);
  std::int32_t build_node(std::vector<std::uint32_t>& perm, std::uint32_t begin, std::uint32_t end,
                          const std::vector<Eigen::Vector3d>& pos);
  double box_dist_sq(const Node& node, const double q[3]) const;
  simd::PointBlock block(const Node& node) const;

  std::vector<Node> nodes_;
  std::vector<double> x_, y_, z_, r_, g_, b_;
  std::vector<std::int32_t> label_;
  std::vector<std::uint32_t> index_;
};

}  // namespace sparsefuse
