#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "sparsefuse/error.hpp"
#include "sparsefuse/geometry.hpp"
#include "sparsefuse/simd/kernels.hpp"

namespace sparsefuse {

struct RegistrationParams {
  double w1 = 0.1;            // photometric weight
  double w2 = 10.0;           // semantic weight
  double reject_dist = 0.05;  // meters, applied to the 3D part of a match only
  int max_iters = 50;         // per radius stage
  double trans_eps = 1e-4;    // meters
  double rot_eps = 1e-4;      // radians
  double fuse_voxel = 0.01;   // meters
  simd::SemanticTerm semantic_term = simd::SemanticTerm::kIndicator;

  // Global alignment runs one ICP stage per radius in this list (descending,
  // each > reject_dist) before the final stage at reject_dist. Empty means a
  // single stage at reject_dist.
  std::vector<double> coarse_radii = {0.6, 0.3, 0.15};
  // Stages after the reject_dist one, descending, each < reject_dist. They
  // only tighten the admissible set; the reported correspondences still use
  // reject_dist.
  std::vector<double> fine_radii = {0.02, 0.01};

  // Plane pre-filter.
  bool prefilter = true;
  double plane_tol = 0.03;
  double min_support_fraction = 0.01;
  int isolation_k = 10;
  double isolation_radius = 0.1;
  int max_planes = 8;
  int ransac_iters = 200;
  std::uint64_t ransac_seed = 0x5eed;

  // Per-label refinement.
  bool local_refine = true;
  std::size_t min_label_points = 50;
  // Segments are checked for sliding directions with the 6x6 covariance of
  // their point-to-plane constraints (normals from neighbours within
  // normal_radius, positions scaled to unit mean spread). A smallest/largest
  // eigenvalue ratio below min_constraint_ratio marks the segment
  // unconstrained.
  double normal_radius = 0.05;
  double min_constraint_ratio = 0.01;

  void validate() const;
};

struct Correspondence {
  std::size_t src_index;
  std::size_t tgt_index;
  double geom_dist;    // meters
  double lifted_cost;  // geometric + photometric + semantic terms
};

struct CorrespondenceSet {
  std::vector<Correspondence> pairs;
  const LabeledCloud* src = nullptr;
  const LabeledCloud* tgt = nullptr;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
  std::vector<PointPair> point_pairs() const;
};

// Raised when the ICP loop meets a degenerate correspondence set. Carries the
// last transform that was computed from a valid set.
class AlignmentFailed : public Error {
 public:
  AlignmentFailed(const std::string& what, RigidTransform last_valid, int iteration)
      : Error(what), last_valid_(last_valid), iteration_(iteration) {}
  const RigidTransform& last_valid() const { return last_valid_; }
  int iteration() const { return iteration_; }

 private:
  RigidTransform last_valid_;
  int iteration_;
};

struct PlaneModel {
  Eigen::Vector3d normal;
  double offset;  // n . p + offset = 0
  std::size_t support;
};

struct PrefilterResult {
  LabeledCloud cloud;
  std::vector<PlaneModel> planes;
  std::size_t removed = 0;
};

// Multi-plane RANSAC followed by isolation removal: a point is dropped only if
// it lies on none of the extracted planes and has fewer than isolation_k
// neighbours within isolation_radius. Input order is preserved.
PrefilterResult plane_prefilter(const LabeledCloud& cloud, double plane_tol, std::size_t min_support,
                                const RegistrationParams& params = {});

// For every source point, the target point minimizing
//   |dxyz|^2 + w1 |drgb|^2 + w2 sem(s, s')
// among targets within reject_dist of it. Sources with no admissible target
// get no pair. Ties go to the lowest target index.
CorrespondenceSet match_7d(const LabeledCloud& src, const LabeledCloud& tgt, const RegistrationParams& params);

struct IcpStageReport {
  double radius;
  int iterations;
  bool converged;
  std::size_t correspondences;
};

struct GlobalAlignment {
  RigidTransform transform;
  CorrespondenceSet correspondences;
  std::vector<IcpStageReport> stages;
};

// Alternates correspondence search and rigid solve starting from identity.
// Throws AlignmentFailed when a step has too few or degenerate matches.
GlobalAlignment align_global(const LabeledCloud& src, const LabeledCloud& tgt,
                             const RegistrationParams& params);

// kUnconstrained: the segment's surfaces leave a direction (sliding along a
// plane or an edge, spinning about an axis) that point-to-point ICP cannot
// pin down, so the refinement is skipped.
enum class LocalStatus { kRefined, kUnmatchedLabel, kTooFewPoints, kDegenerate, kUnconstrained };

std::string to_string(LocalStatus status);

struct LocalAlignment {
  Label label;
  RigidTransform transform;
  LocalStatus status;
  std::size_t src_points;
  std::size_t tgt_points;
  double constraint_ratio = 0;  // see RegistrationParams::min_constraint_ratio
};

// Per-label refinement of an already aligned source. One entry per label in
// the source, ascending by label.
std::vector<LocalAlignment> align_local(const LabeledCloud& src, const LabeledCloud& tgt,
                                        const RegistrationParams& params);

// Applies each label's transform to that label's points; order preserved.
LabeledCloud apply_local(const LabeledCloud& src, const std::vector<LocalAlignment>& locals);

// Voxel-grid fusion: points sharing a cell and a label collapse to their mean
// position and mean color. Output is ordered by cell, then label.
LabeledCloud fuse(const std::vector<LabeledCloud>& clouds, double voxel);

struct ViewRegistration {
  RigidTransform global;  // view frame -> first view frame
  std::vector<LocalAlignment> local;
  std::vector<IcpStageReport> stages;
  std::size_t input_points = 0;
  std::size_t filtered_points = 0;
  std::size_t correspondences = 0;
};

struct FusedScene {
  LabeledCloud cloud;
  std::vector<RigidTransform> per_view_transforms;
  std::vector<ViewRegistration> views;
};

class PipelineError : public Error {
 public:
  PipelineError(const std::string& what, std::size_t view_index, FusedScene partial)
      : Error(what), view_index_(view_index), partial_(std::move(partial)) {}
  std::size_t view_index() const { return view_index_; }
  const FusedScene& partial() const { return partial_; }

 private:
  std::size_t view_index_;
  FusedScene partial_;
};

// Sequential accumulation: the first view seeds the model, every later view
// is aligned globally then per label against everything fused so far.
FusedScene reconstruct(const std::vector<View>& views, const RegistrationParams& params);

// Same pipeline on clouds that are already unprojected.
FusedScene reconstruct_clouds(const std::vector<LabeledCloud>& clouds, const RegistrationParams& params);

}  // namespace sparsefuse
