#include "sparsefuse/geometry.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "sparsefuse/error.hpp"

namespace sparsefuse {

void Intrinsics::validate() const {
  std::ostringstream why;
  if (!(fx > 0) || !(fy > 0)) why << "focal lengths must be positive (fx=" << fx << ", fy=" << fy << "); ";
  if (width <= 0 || height <= 0) why << "raster size must be positive (" << width << "x" << height << "); ";
  if (!(cx >= 0 && cx < width)) why << "cx=" << cx << " outside [0," << width << "); ";
  if (!(cy >= 0 && cy < height)) why << "cy=" << cy << " outside [0," << height << "); ";
  const auto msg = why.str();
  if (!msg.empty()) throw InvalidInput("invalid intrinsics: " + msg.substr(0, msg.size() - 2));
}

void View::validate() const {
  intrinsics.validate();
  const int w = intrinsics.width;
  const int h = intrinsics.height;
  auto check = [&](const char* name, int rw, int rh) {
    if (rw != w || rh != h) {
      std::ostringstream os;
      os << name << " raster is " << rw << "x" << rh << " but intrinsics declare " << w << "x" << h;
      throw InvalidInput(os.str());
    }
  };
  check("color", color.width, color.height);
  check("depth", depth.width, depth.height);
  check("label", labels.width, labels.height);
}

RigidTransform RigidTransform::from_axis_angle(const Eigen::Vector3d& axis, double angle,
                                               const Eigen::Vector3d& translation) {
  RigidTransform t;
  t.rotation = Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
  t.translation = translation;
  return t;
}

RigidTransform RigidTransform::operator*(const RigidTransform& other) const {
  RigidTransform out;
  out.rotation = rotation * other.rotation;
  out.translation = rotation * other.translation + translation;
  return out;
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform out;
  out.rotation = rotation.transpose();
  out.translation = -(out.rotation * translation);
  return out;
}

double RigidTransform::angle() const {
  const Eigen::Vector3d axis(rotation(2, 1) - rotation(1, 2), rotation(0, 2) - rotation(2, 0),
                             rotation(1, 0) - rotation(0, 1));
  const double sin_part = 0.5 * axis.norm();
  const double cos_part = 0.5 * (rotation.trace() - 1.0);
  return std::atan2(sin_part, cos_part);
}

bool RigidTransform::is_proper(double tol) const {
  const double ortho = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(rotation.determinant() - 1.0) <= tol && translation.allFinite();
}

PoseError pose_error(const RigidTransform& estimate, const RigidTransform& truth) {
  RigidTransform delta;
  delta.rotation = estimate.rotation * truth.rotation.transpose();
  return {delta.angle(), (estimate.translation - truth.translation).norm()};
}

Eigen::Vector3d unproject_pixel(const Intrinsics& k, double u, double v, double depth) {
  return {(u - k.cx) * depth / k.fx, (v - k.cy) * depth / k.fy, depth};
}

Eigen::Vector2d project(const Intrinsics& k, const Eigen::Vector3d& p) {
  return {k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy};
}

LabeledCloud unproject(const View& view) {
  view.validate();
  const auto& k = view.intrinsics;
  LabeledCloud cloud;
  cloud.reserve(view.depth.size());
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      const float d = view.depth.at(u, v);
      const Label label = view.labels.at(u, v);
      if (!valid_depth(d) || label == kUnlabeled) continue;
      LabeledPoint p;
      p.position = unproject_pixel(k, u, v, d);
      p.color = view.color.at(u, v).cast<double>();
      p.label = label;
      cloud.push_back(p);
    }
  }
  return cloud;
}

LabeledCloud apply_transform(const LabeledCloud& cloud, const RigidTransform& t) {
  LabeledCloud out(cloud);
  for (auto& p : out) p.position = t(p.position);
  return out;
}

RigidTransform solve_rigid(std::span<const PointPair> pairs) {
  if (pairs.size() < 3) {
    throw DegenerateGeometry("rigid solve needs at least 3 correspondences, got " +
                             std::to_string(pairs.size()));
  }
  const double n = static_cast<double>(pairs.size());
  Eigen::Vector3d src_mean = Eigen::Vector3d::Zero();
  Eigen::Vector3d tgt_mean = Eigen::Vector3d::Zero();
  for (const auto& p : pairs) {
    src_mean += p.source;
    tgt_mean += p.target;
  }
  src_mean /= n;
  tgt_mean /= n;

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  double spread = 0;
  for (const auto& p : pairs) {
    const Eigen::Vector3d a = p.source - src_mean;
    cov.noalias() += (p.target - tgt_mean) * a.transpose();
    spread += a.squaredNorm();
  }

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d sv = svd.singularValues();
  // Rank < 2 means the source (or its image) is collinear or a single point.
  // The second singular value is compared against the source spread so the
  // test is scale-free.
  if (!(spread > 0) || !(sv(1) > 1e-12 * spread) || !cov.allFinite()) {
    throw DegenerateGeometry("rigid solve on collinear or coincident points");
  }

  Eigen::Matrix3d fix = Eigen::Matrix3d::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0) fix(2, 2) = -1;

  RigidTransform t;
  t.rotation = svd.matrixU() * fix * svd.matrixV().transpose();
  t.translation = tgt_mean - t.rotation * src_mean;
  return t;
}

double rigid_objective(std::span<const PointPair> pairs, const RigidTransform& t) {
  double sum = 0;
  for (const auto& p : pairs) sum += (p.target - t(p.source)).squaredNorm();
  return 0.5 * sum;
}

}  // namespace sparsefuse
