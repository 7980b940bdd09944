#include "sparsefuse/registration.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "sparsefuse/kdtree.hpp"

namespace sparsefuse {
namespace {

simd::LiftedWeights weights_of(const RegistrationParams& p) {
  return {p.w1, p.w2, p.semantic_term};
}

simd::LiftedQuery query_of(const LabeledPoint& p) {
  return {p.position.x(), p.position.y(), p.position.z(),
          p.color.x(),    p.color.y(),    p.color.z(),
          static_cast<std::int32_t>(p.label)};
}

std::vector<Correspondence> match_against(const LabeledCloud& src, const KdTree& tree,
                                          const simd::LiftedWeights& w, double radius) {
  std::vector<Correspondence> pairs;
  pairs.reserve(src.size());
  const double max_sq = radius * radius;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const auto m = tree.nearest_lifted(query_of(src[i]), w, max_sq);
    if (!m) continue;
    pairs.push_back({i, m->index, std::sqrt(m->geom_sq), m->cost});
  }
  return pairs;
}

std::vector<PointPair> to_point_pairs(const LabeledCloud& src, const LabeledCloud& tgt,
                                      const std::vector<Correspondence>& pairs) {
  std::vector<PointPair> out;
  out.reserve(pairs.size());
  for (const auto& c : pairs) out.push_back({src[c.src_index].position, tgt[c.tgt_index].position});
  return out;
}

std::vector<double> stage_radii(const RegistrationParams& params) {
  std::vector<double> radii;
  for (double r : params.coarse_radii) {
    if (r > params.reject_dist) radii.push_back(r);
  }
  std::sort(radii.begin(), radii.end(), std::greater<>());
  radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
  radii.push_back(params.reject_dist);
  std::vector<double> fine;
  for (double r : params.fine_radii) {
    if (r < params.reject_dist) fine.push_back(r);
  }
  std::sort(fine.begin(), fine.end(), std::greater<>());
  fine.erase(std::unique(fine.begin(), fine.end()), fine.end());
  radii.insert(radii.end(), fine.begin(), fine.end());
  return radii;
}

double constraint_ratio(const LabeledCloud& part, double radius) {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  for (const auto& p : part) center += p.position;
  center /= static_cast<double>(part.size());
  double spread = 0;
  for (const auto& p : part) spread += (p.position - center).norm();
  spread /= static_cast<double>(part.size());
  if (!(spread > 0)) return 0;

  const KdTree tree(part);
  Eigen::Matrix<double, 6, 6> cov = Eigen::Matrix<double, 6, 6>::Zero();
  for (const auto& p : part) {
    const auto nb = tree.radius_search(p.position, radius);
    if (nb.size() < 3) continue;
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (auto j : nb) mean += part[j].position;
    mean /= static_cast<double>(nb.size());
    Eigen::Matrix3d s = Eigen::Matrix3d::Zero();
    for (auto j : nb) s += (part[j].position - mean) * (part[j].position - mean).transpose();
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(s);
    if (!(eig.eigenvalues()(1) > 1e-12 * eig.eigenvalues()(2))) continue;
    const Eigen::Vector3d n = eig.eigenvectors().col(0);
    Eigen::Matrix<double, 6, 1> row;
    row << ((p.position - center) / spread).cross(n), n;
    cov += row * row.transpose();
  }
  const auto ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>>(cov, Eigen::EigenvaluesOnly).eigenvalues();
  return ev(5) > 0 ? ev(0) / ev(5) : 0;
}

}  // namespace

void RegistrationParams::validate() const {
  std::ostringstream why;
  if (!(w1 >= 0)) why << "w1 must be >= 0; ";
  if (!(w2 >= 0)) why << "w2 must be >= 0; ";
  if (!(reject_dist > 0)) why << "reject_dist must be > 0; ";
  if (max_iters < 1) why << "max_iters must be >= 1; ";
  if (!(trans_eps >= 0)) why << "trans_eps must be >= 0; ";
  if (!(rot_eps >= 0)) why << "rot_eps must be >= 0; ";
  if (!(fuse_voxel > 0)) why << "fuse_voxel must be > 0; ";
  if (!(plane_tol > 0)) why << "plane_tol must be > 0; ";
  if (!(min_support_fraction >= 0 && min_support_fraction <= 1)) why << "min_support_fraction must be in [0,1]; ";
  if (isolation_k < 0) why << "isolation_k must be >= 0; ";
  if (!(isolation_radius > 0)) why << "isolation_radius must be > 0; ";
  if (!(normal_radius > 0)) why << "normal_radius must be > 0; ";
  if (!(min_constraint_ratio >= 0 && min_constraint_ratio <= 1)) why << "min_constraint_ratio must be in [0,1]; ";
  for (double r : coarse_radii) {
    if (!(r > 0) || !std::isfinite(r)) why << "coarse radii must be positive and finite; ";
  }
  for (double r : fine_radii) {
    if (!(r > 0) || !std::isfinite(r)) why << "fine radii must be positive and finite; ";
  }
  const auto msg = why.str();
  if (!msg.empty()) throw InvalidInput("invalid registration parameters: " + msg.substr(0, msg.size() - 2));
}

std::vector<PointPair> CorrespondenceSet::point_pairs() const {
  if (src == nullptr || tgt == nullptr) return {};
  return to_point_pairs(*src, *tgt, pairs);
}

CorrespondenceSet match_7d(const LabeledCloud& src, const LabeledCloud& tgt, const RegistrationParams& params) {
  params.validate();
  CorrespondenceSet set;
  set.src = &src;
  set.tgt = &tgt;
  if (src.empty() || tgt.empty()) return set;
  const KdTree tree(tgt);
  set.pairs = match_against(src, tree, weights_of(params), params.reject_dist);
  return set;
}

GlobalAlignment align_global(const LabeledCloud& src, const LabeledCloud& tgt, const RegistrationParams& params) {
  params.validate();
  if (src.empty() || tgt.empty()) {
    throw AlignmentFailed("cannot align an empty cloud", RigidTransform::identity(), 0);
  }
  const KdTree tree(tgt);
  const auto w = weights_of(params);

  GlobalAlignment result;
  RigidTransform current = RigidTransform::identity();
  LabeledCloud moved;
  for (double radius : stage_radii(params)) {
    IcpStageReport stage{radius, 0, false, 0};
    for (int it = 1; it <= params.max_iters; ++it) {
      moved = apply_transform(src, current);
      const auto pairs = match_against(moved, tree, w, radius);
      stage.iterations = it;
      stage.correspondences = pairs.size();
      RigidTransform step;
      try {
        step = solve_rigid(to_point_pairs(moved, tgt, pairs));
      } catch (const DegenerateGeometry& e) {
        std::ostringstream os;
        os << "alignment failed at radius " << radius << " iteration " << it << " with " << pairs.size()
           << " correspondences: " << e.what();
        throw AlignmentFailed(os.str(), current, it);
      }
      current = step * current;
      if (step.translation.norm() < params.trans_eps && step.angle() < params.rot_eps) {
        stage.converged = true;
        break;
      }
    }
    result.stages.push_back(stage);
  }

  result.transform = current;
  result.correspondences.src = &src;
  result.correspondences.tgt = &tgt;
  // Indices refer to src; the geometry is evaluated at the final pose.
  result.correspondences.pairs = match_against(apply_transform(src, current), tree, w, params.reject_dist);
  return result;
}

std::string to_string(LocalStatus status) {
  switch (status) {
    case LocalStatus::kRefined:
      return "refined";
    case LocalStatus::kUnmatchedLabel:
      return "unmatched_label";
    case LocalStatus::kTooFewPoints:
      return "too_few_points";
    case LocalStatus::kDegenerate:
      return "degenerate";
    case LocalStatus::kUnconstrained:
      return "unconstrained";
  }
  return "unknown";
}

std::vector<LocalAlignment> align_local(const LabeledCloud& src, const LabeledCloud& tgt,
                                        const RegistrationParams& params) {
  params.validate();
  std::map<Label, LabeledCloud> src_parts, tgt_parts;
  for (const auto& p : src) src_parts[p.label].push_back(p);
  for (const auto& p : tgt) tgt_parts[p.label].push_back(p);

  RegistrationParams local = params;
  local.coarse_radii.clear();

  std::vector<LocalAlignment> out;
  for (const auto& [label, part] : src_parts) {
    LocalAlignment entry{label, RigidTransform::identity(), LocalStatus::kRefined, part.size(), 0};
    const auto it = tgt_parts.find(label);
    if (it == tgt_parts.end()) {
      entry.status = LocalStatus::kUnmatchedLabel;
    } else {
      entry.tgt_points = it->second.size();
      if (part.size() < params.min_label_points || it->second.size() < params.min_label_points) {
        entry.status = LocalStatus::kTooFewPoints;
      } else if (entry.constraint_ratio = constraint_ratio(part, params.normal_radius);
                 entry.constraint_ratio < params.min_constraint_ratio) {
        entry.status = LocalStatus::kUnconstrained;
      } else {
        try {
          entry.transform = align_global(part, it->second, local).transform;
        } catch (const AlignmentFailed&) {
          entry.status = LocalStatus::kDegenerate;
        }
      }
    }
    out.push_back(entry);
  }
  return out;
}

LabeledCloud apply_local(const LabeledCloud& src, const std::vector<LocalAlignment>& locals) {
  std::map<Label, const RigidTransform*> by_label;
  for (const auto& l : locals) by_label[l.label] = &l.transform;
  LabeledCloud out(src);
  for (auto& p : out) {
    if (const auto it = by_label.find(p.label); it != by_label.end()) p.position = (*it->second)(p.position);
  }
  return out;
}

}  // namespace sparsefuse
