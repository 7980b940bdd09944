#pragma once

#include <cstddef>
#include <vector>

#include "sparsefuse/geometry.hpp"

namespace sparsefuse {

struct DeltaAccuracy {
  double threshold;
  double fraction;
};

struct DepthMetrics {
  double rel = 0;
  double log10 = 0;
  double rms = 0;
  std::vector<DeltaAccuracy> delta;
  std::size_t valid_pixels = 0;
};

inline const std::vector<double> kDefaultDeltaThresholds = {1.25, 1.25 * 1.25, 1.25 * 1.25 * 1.25};

// Standard monocular depth errors over pixels where both rasters hold a
// finite positive depth. Throws UndefinedMetrics when there are none.
DepthMetrics depth_metrics(const DepthRaster& pred, const DepthRaster& gt,
                           const std::vector<double>& thresholds = kDefaultDeltaThresholds);

struct ClassScore {
  Label label;
  std::size_t support;  // ground-truth pixels of this class
  double accuracy;
  double iou;
};

struct SegMetrics {
  double pixel_acc = 0;
  double mean_acc = 0;
  double iou = 0;
  std::vector<ClassScore> per_class;  // supported classes only, ascending label
  std::size_t evaluated_pixels = 0;
};

// Confusion-matrix scores over classes [0, num_classes). Pixels whose ground
// truth is kUnlabeled are skipped; any other label outside the range is an
// InvalidInput. Predictions outside the range count as misses.
SegMetrics seg_metrics(const LabelRaster& pred, const LabelRaster& gt, std::size_t num_classes);

struct ReconMetrics {
  double accuracy = 0;      // mean nearest distance recon -> gt
  double completeness = 0;  // fraction of gt with a recon point within threshold
  double threshold = 0;
};

ReconMetrics recon_metrics(const LabeledCloud& recon, const LabeledCloud& gt, double threshold);

}  // namespace sparsefuse
