#include <cmath>
#include <sstream>

#include "sparsefuse/registration.hpp"

namespace sparsefuse {
namespace {

LabeledCloud filter_view(const LabeledCloud& cloud, const RegistrationParams& params, ViewRegistration& info) {
  info.input_points = cloud.size();
  if (!params.prefilter || cloud.empty()) {
    info.filtered_points = cloud.size();
    return cloud;
  }
  const auto min_support = static_cast<std::size_t>(
      std::ceil(params.min_support_fraction * static_cast<double>(cloud.size())));
  auto filtered = plane_prefilter(cloud, params.plane_tol, min_support, params).cloud;
  info.filtered_points = filtered.size();
  return filtered;
}

}  // namespace

FusedScene reconstruct_clouds(const std::vector<LabeledCloud>& clouds, const RegistrationParams& params) {
  params.validate();
  if (clouds.empty()) throw InvalidInput("reconstruction needs at least one view");

  FusedScene scene;
  std::vector<LabeledCloud> aligned;

  ViewRegistration first;
  aligned.push_back(filter_view(clouds[0], params, first));
  scene.per_view_transforms.push_back(RigidTransform::identity());
  scene.views.push_back(first);

  // Each view starts from the previous view's pose: views arrive in capture
  // order, so neighbours are the closest available guess.
  RigidTransform previous = RigidTransform::identity();
  for (std::size_t i = 1; i < clouds.size(); ++i) {
    ViewRegistration info;
    const LabeledCloud filtered = filter_view(clouds[i], params, info);
    const LabeledCloud target = fuse(aligned, params.fuse_voxel);

    GlobalAlignment global;
    try {
      global = align_global(apply_transform(filtered, previous), target, params);
    } catch (const AlignmentFailed& e) {
      scene.cloud = target;
      std::ostringstream os;
      os << "view " << i << " failed global alignment: " << e.what();
      throw PipelineError(os.str(), i, std::move(scene));
    }
    info.global = global.transform * previous;
    info.stages = global.stages;
    info.correspondences = global.correspondences.size();

    LabeledCloud placed = apply_transform(filtered, info.global);
    if (params.local_refine) {
      info.local = align_local(placed, target, params);
      placed = apply_local(placed, info.local);
    }
    aligned.push_back(std::move(placed));
    scene.per_view_transforms.push_back(info.global);
    scene.views.push_back(std::move(info));
    previous = scene.per_view_transforms.back();
  }
  scene.cloud = fuse(aligned, params.fuse_voxel);
  return scene;
}

FusedScene reconstruct(const std::vector<View>& views, const RegistrationParams& params) {
  if (views.empty()) throw InvalidInput("reconstruction needs at least one view");
  std::vector<LabeledCloud> clouds;
  clouds.reserve(views.size());
  for (const auto& v : views) clouds.push_back(unproject(v));
  return reconstruct_clouds(clouds, params);
}

}  // namespace sparsefuse
