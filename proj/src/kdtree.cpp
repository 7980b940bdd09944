#include "sparsefuse/kdtree.hpp"

#include <algorithm>
#include <array>
#include <limits>

#include "sparsefuse/error.hpp"

namespace sparsefuse {
namespace {

struct StackEntry {
  std::int32_t node;
  double dist_sq;
};

constexpr std::size_t kMaxDepth = 64;

}  // namespace

KdTree::KdTree(const LabeledCloud& cloud) {
  std::vector<Eigen::Vector3d> pos, rgb;
  std::vector<std::int32_t> labels;
  pos.reserve(cloud.size());
  rgb.reserve(cloud.size());
  labels.reserve(cloud.size());
  for (const auto& p : cloud) {
    pos.push_back(p.position);
    rgb.push_back(p.color);
    labels.push_back(p.label);
  }
  build(std::move(pos), std::move(rgb), std::move(labels));
}

KdTree::KdTree(std::span<const Eigen::Vector3d> positions) {
  build(std::vector<Eigen::Vector3d>(positions.begin(), positions.end()),
        std::vector<Eigen::Vector3d>(positions.size(), Eigen::Vector3d::Zero()),
        std::vector<std::int32_t>(positions.size(), 0));
}

void KdTree::build(std::vector<Eigen::Vector3d> pos, std::vector<Eigen::Vector3d> rgb,
                   std::vector<std::int32_t> labels) {
  if (pos.size() >= std::numeric_limits<std::uint32_t>::max()) {
    throw InvalidInput("k-d tree supports fewer than 2^32 points");
  }
  for (const auto& p : pos) {
    if (!p.allFinite()) throw InvalidInput("k-d tree input contains a non-finite position");
  }
  const auto n = static_cast<std::uint32_t>(pos.size());
  std::vector<std::uint32_t> perm(n);
  for (std::uint32_t i = 0; i < n; ++i) perm[i] = i;
  nodes_.clear();
  if (n > 0) {
    nodes_.reserve(2 * (n / kLeafSize + 1));
    build_node(perm, 0, n, pos);
  }

  x_.resize(n), y_.resize(n), z_.resize(n);
  r_.resize(n), g_.resize(n), b_.resize(n);
  label_.resize(n);
  index_ = perm;
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto src = perm[i];
    x_[i] = pos[src].x(), y_[i] = pos[src].y(), z_[i] = pos[src].z();
    r_[i] = rgb[src].x(), g_[i] = rgb[src].y(), b_[i] = rgb[src].z();
    label_[i] = labels[src];
  }
}

std::int32_t KdTree::build_node(std::vector<std::uint32_t>& perm, std::uint32_t begin,
                                std::uint32_t end, const std::vector<Eigen::Vector3d>& pos) {
  Node node;
  node.begin = begin;
  node.end = end;
  Eigen::Vector3d lo = pos[perm[begin]], hi = lo;
  for (auto i = begin + 1; i < end; ++i) {
    lo = lo.cwiseMin(pos[perm[i]]);
    hi = hi.cwiseMax(pos[perm[i]]);
  }
  for (int d = 0; d < 3; ++d) node.lo[d] = lo[d], node.hi[d] = hi[d];

  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= kLeafSize) return id;

  int axis;
  (hi - lo).maxCoeff(&axis);
  const auto mid = begin + (end - begin) / 2;
  std::nth_element(perm.begin() + begin, perm.begin() + mid, perm.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double pa = pos[a][axis], pb = pos[b][axis];
                     return pa < pb || (pa == pb && a < b);
                   });
  const auto left = build_node(perm, begin, mid, pos);
  const auto right = build_node(perm, mid, end, pos);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

double KdTree::box_dist_sq(const Node& node, const double q[3]) const {
  double acc[3];
  for (int d = 0; d < 3; ++d) {
    double delta = 0;
    if (q[d] < node.lo[d]) {
      delta = node.lo[d] - q[d];
    } else if (q[d] > node.hi[d]) {
      delta = q[d] - node.hi[d];
    }
    acc[d] = delta * delta;
  }
  return acc[0] + acc[1] + acc[2];
}

simd::PointBlock KdTree::block(const Node& node) const {
  const auto b = node.begin;
  return {x_.data() + b, y_.data() + b, z_.data() + b, r_.data() + b,
          g_.data() + b, b_.data() + b, label_.data() + b, node.end - node.begin};
}

std::optional<KdTree::Neighbor> KdTree::nearest(const Eigen::Vector3d& query) const {
  if (nodes_.empty()) return std::nullopt;
  const double q[3] = {query.x(), query.y(), query.z()};
  const auto& k = simd::kernels();
  std::array<double, kLeafSize> dist;

  double best = std::numeric_limits<double>::infinity();
  std::size_t best_index = std::numeric_limits<std::size_t>::max();

  std::array<StackEntry, 2 * kMaxDepth> stack;
  std::size_t top = 0;
  stack[top++] = {0, box_dist_sq(nodes_[0], q)};
  while (top > 0) {
    const auto [id, bound] = stack[--top];
    if (bound > best) continue;
    const Node& node = nodes_[id];
    if (node.leaf()) {
      const auto n = node.end - node.begin;
      k.squared_distance(q, x_.data() + node.begin, y_.data() + node.begin, z_.data() + node.begin,
                         n, dist.data());
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t idx = index_[node.begin + i];
        if (dist[i] < best || (dist[i] == best && idx < best_index)) {
          best = dist[i];
          best_index = idx;
        }
      }
      continue;
    }
    const double dl = box_dist_sq(nodes_[node.left], q);
    const double dr = box_dist_sq(nodes_[node.right], q);
    if (dl <= dr) {
      stack[top++] = {node.right, dr};
      stack[top++] = {node.left, dl};
    } else {
      stack[top++] = {node.left, dl};
      stack[top++] = {node.right, dr};
    }
  }
  return Neighbor{best_index, best};
}

std::optional<KdTree::LiftedMatch> KdTree::nearest_lifted(const simd::LiftedQuery& query,
                                                          const simd::LiftedWeights& w,
                                                          double max_geom_sq) const {
  if (nodes_.empty()) return std::nullopt;
  const double q[3] = {query.x, query.y, query.z};
  const auto& k = simd::kernels();
  std::array<double, kLeafSize> geom, cost;

  double best = std::numeric_limits<double>::infinity();
  double best_geom = 0;
  std::size_t best_index = std::numeric_limits<std::size_t>::max();

  // cost >= geometric distance, so a box farther than the best cost (or the
  // admissible radius) cannot hold a better candidate.
  std::array<StackEntry, 2 * kMaxDepth> stack;
  std::size_t top = 0;
  stack[top++] = {0, box_dist_sq(nodes_[0], q)};
  while (top > 0) {
    const auto [id, bound] = stack[--top];
    if (bound > best || bound > max_geom_sq) continue;
    const Node& node = nodes_[id];
    if (node.leaf()) {
      const auto blk = block(node);
      k.lifted_cost(query, blk, w, geom.data(), cost.data());
      for (std::size_t i = 0; i < blk.size; ++i) {
        if (!(geom[i] <= max_geom_sq)) continue;
        const std::size_t idx = index_[node.begin + i];
        if (cost[i] < best || (cost[i] == best && idx < best_index)) {
          best = cost[i];
          best_geom = geom[i];
          best_index = idx;
        }
      }
      continue;
    }
    const double dl = box_dist_sq(nodes_[node.left], q);
    const double dr = box_dist_sq(nodes_[node.right], q);
    if (dl <= dr) {
      stack[top++] = {node.right, dr};
      stack[top++] = {node.left, dl};
    } else {
      stack[top++] = {node.left, dl};
      stack[top++] = {node.right, dr};
    }
  }
  if (best_index == std::numeric_limits<std::size_t>::max()) return std::nullopt;
  return LiftedMatch{best_index, best_geom, best};
}

std::size_t KdTree::count_within(const Eigen::Vector3d& query, double radius, std::size_t limit) const {
  if (nodes_.empty() || limit == 0) return 0;
  const double q[3] = {query.x(), query.y(), query.z()};
  const double r2 = radius * radius;
  const auto& k = simd::kernels();
  std::array<double, kLeafSize> dist;
  std::size_t count = 0;

  std::array<StackEntry, 2 * kMaxDepth> stack;
  std::size_t top = 0;
  stack[top++] = {0, box_dist_sq(nodes_[0], q)};
  while (top > 0) {
    const auto [id, bound] = stack[--top];
    if (bound > r2) continue;
    const Node& node = nodes_[id];
    if (node.leaf()) {
      const auto n = node.end - node.begin;
      k.squared_distance(q, x_.data() + node.begin, y_.data() + node.begin, z_.data() + node.begin,
                         n, dist.data());
      for (std::size_t i = 0; i < n; ++i) {
        if (dist[i] <= r2 && ++count >= limit) return count;
      }
      continue;
    }
    stack[top++] = {node.left, box_dist_sq(nodes_[node.left], q)};
    stack[top++] = {node.right, box_dist_sq(nodes_[node.right], q)};
  }
  return count;
}

std::vector<std::size_t> KdTree::radius_search(const Eigen::Vector3d& query, double radius) const {
  std::vector<std::size_t> out;
  if (nodes_.empty()) return out;
  const double q[3] = {query.x(), query.y(), query.z()};
  const double r2 = radius * radius;
  const auto& k = simd::kernels();
  std::array<double, kLeafSize> dist;

  std::array<StackEntry, 2 * kMaxDepth> stack;
  std::size_t top = 0;
  stack[top++] = {0, box_dist_sq(nodes_[0], q)};
  while (top > 0) {
    const auto [id, bound] = stack[--top];
    if (bound > r2) continue;
    const Node& node = nodes_[id];
    if (node.leaf()) {
      const auto n = node.end - node.begin;
      k.squared_distance(q, x_.data() + node.begin, y_.data() + node.begin, z_.data() + node.begin,
                         n, dist.data());
      for (std::size_t i = 0; i < n; ++i) {
        if (dist[i] <= r2) out.push_back(index_[node.begin + i]);
      }
      continue;
    }
    stack[top++] = {node.left, box_dist_sq(nodes_[node.left], q)};
    stack[top++] = {node.right, box_dist_sq(nodes_[node.right], q)};
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace sparsefuse
