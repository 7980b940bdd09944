#include <algorithm>
#include <random>

#include <Eigen/Eigenvalues>

#include "sparsefuse/kdtree.hpp"
#include "sparsefuse/registration.hpp"

namespace sparsefuse {
namespace {

struct Soa {
  std::vector<double> x, y, z;
  std::vector<std::size_t> index;  // into the input cloud
};

// Least-squares plane through the given points; normal is the eigenvector of
// the smallest eigenvalue of the scatter matrix.
std::optional<PlaneModel> fit_plane(const Soa& pts, const std::vector<double>& dist, double tol) {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  std::size_t n = 0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] <= tol) {
      mean += Eigen::Vector3d(pts.x[i], pts.y[i], pts.z[i]);
      ++n;
    }
  }
  if (n < 3) return std::nullopt;
  mean /= static_cast<double>(n);
  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] <= tol) {
      const Eigen::Vector3d d = Eigen::Vector3d(pts.x[i], pts.y[i], pts.z[i]) - mean;
      scatter.noalias() += d * d.transpose();
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(scatter);
  const Eigen::Vector3d normal = eig.eigenvectors().col(0).normalized();
  if (!normal.allFinite()) return std::nullopt;
  return PlaneModel{normal, -normal.dot(mean), n};
}

std::size_t count_inliers(const std::vector<double>& dist, double tol) {
  return static_cast<std::size_t>(std::count_if(dist.begin(), dist.end(), [tol](double d) { return d <= tol; }));
}

}  // namespace

PrefilterResult plane_prefilter(const LabeledCloud& cloud, double plane_tol, std::size_t min_support,
                                const RegistrationParams& params) {
  PrefilterResult result;
  if (cloud.empty()) return result;
  if (!(plane_tol > 0)) throw InvalidInput("plane tolerance must be positive");
  min_support = std::max<std::size_t>(min_support, 3);

  Soa rest;
  rest.x.reserve(cloud.size());
  rest.y.reserve(cloud.size());
  rest.z.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    rest.x.push_back(cloud[i].position.x());
    rest.y.push_back(cloud[i].position.y());
    rest.z.push_back(cloud[i].position.z());
    rest.index.push_back(i);
  }

  std::vector<char> on_plane(cloud.size(), 0);
  std::mt19937_64 rng(params.ransac_seed);
  const auto& k = simd::kernels();
  std::vector<double> dist;

  for (int plane = 0; plane < params.max_planes && rest.index.size() >= min_support; ++plane) {
    const std::size_t n = rest.index.size();
    std::optional<PlaneModel> best;
    std::size_t best_count = 0;
    dist.resize(n);
    for (int it = 0; it < params.ransac_iters; ++it) {
      const std::size_t a = rng() % n, b = rng() % n, c = rng() % n;
      if (a == b || b == c || a == c) continue;
      const Eigen::Vector3d pa(rest.x[a], rest.y[a], rest.z[a]);
      const Eigen::Vector3d pb(rest.x[b], rest.y[b], rest.z[b]);
      const Eigen::Vector3d pc(rest.x[c], rest.y[c], rest.z[c]);
      Eigen::Vector3d normal = (pb - pa).cross(pc - pa);
      const double len = normal.norm();
      if (!(len > 1e-12)) continue;
      normal /= len;
      const double offset = -normal.dot(pa);
      k.plane_distance(normal.data(), offset, rest.x.data(), rest.y.data(), rest.z.data(), n, dist.data());
      const std::size_t count = count_inliers(dist, plane_tol);
      if (count > best_count) {
        best_count = count;
        best = PlaneModel{normal, offset, count};
      }
    }
    if (!best || best_count < min_support) break;

    // Refit on the consensus set and take the refit's inliers.
    k.plane_distance(best->normal.data(), best->offset, rest.x.data(), rest.y.data(), rest.z.data(), n,
                     dist.data());
    if (auto refit = fit_plane(rest, dist, plane_tol)) {
      std::vector<double> refit_dist(n);
      k.plane_distance(refit->normal.data(), refit->offset, rest.x.data(), rest.y.data(), rest.z.data(), n,
                       refit_dist.data());
      if (count_inliers(refit_dist, plane_tol) >= best_count) {
        best = refit;
        dist.swap(refit_dist);
      }
    }
    best->support = count_inliers(dist, plane_tol);
    result.planes.push_back(*best);

    Soa next;
    for (std::size_t i = 0; i < n; ++i) {
      if (dist[i] <= plane_tol) {
        on_plane[rest.index[i]] = 1;
      } else {
        next.x.push_back(rest.x[i]);
        next.y.push_back(rest.y[i]);
        next.z.push_back(rest.z[i]);
        next.index.push_back(rest.index[i]);
      }
    }
    rest = std::move(next);
  }

  const KdTree tree(cloud);
  const auto k_needed = static_cast<std::size_t>(std::max(params.isolation_k, 0));
  result.cloud.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!on_plane[i]) {
      // The count includes the point itself.
      const auto found = tree.count_within(cloud[i].position, params.isolation_radius, k_needed + 1);
      if (found < k_needed + 1) {
        ++result.removed;
        continue;
      }
    }
    result.cloud.push_back(cloud[i]);
  }
  return result;
}

}  // namespace sparsefuse
