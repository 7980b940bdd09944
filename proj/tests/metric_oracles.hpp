#pragma once

// Straight-line reimplementations of the evaluation formulas: plain loops,
// plain sums, quadratic nearest-neighbour scans.

#include <cmath>
#include <limits>
#include <vector>

#include "sparsefuse/metrics.hpp"

namespace sparsefuse::testing {

struct DepthOracle {
  double rel = 0, log10 = 0, rms = 0;
  std::vector<double> delta;
  std::size_t n = 0;
};

inline DepthOracle depth_oracle(const DepthRaster& pred, const DepthRaster& gt, const std::vector<double>& thresholds) {
  DepthOracle o;
  o.delta.assign(thresholds.size(), 0.0);
  double rel = 0, lg = 0, sq = 0;
  for (std::size_t i = 0; i < gt.data.size(); ++i) {
    const float pf = pred.data[i], gf = gt.data[i];
    if (!(std::isfinite(pf) && pf > 0 && std::isfinite(gf) && gf > 0)) continue;
    const double p = pf, g = gf;
    rel += std::abs(p - g) / g;
    lg += std::abs(std::log10(p) - std::log10(g));
    sq += (p - g) * (p - g);
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
      if (std::max(p / g, g / p) < thresholds[t]) o.delta[t] += 1;
    }
    ++o.n;
  }
  o.rel = rel / o.n;
  o.log10 = lg / o.n;
  o.rms = std::sqrt(sq / o.n);
  for (auto& d : o.delta) d /= o.n;
  return o;
}

struct SegOracle {
  double pixel_acc = 0, mean_acc = 0, iou = 0;
};

inline SegOracle seg_oracle(const LabelRaster& pred, const LabelRaster& gt, std::size_t classes) {
  SegOracle o;
  double correct = 0, total = 0, acc_sum = 0, iou_sum = 0, supported = 0;
  for (std::size_t i = 0; i < gt.data.size(); ++i) {
    if (gt.data[i] == kUnlabeled) continue;
    total += 1;
    if (pred.data[i] == gt.data[i]) correct += 1;
  }
  for (std::size_t c = 0; c < classes; ++c) {
    double tp = 0, fn = 0, fp = 0;
    for (std::size_t i = 0; i < gt.data.size(); ++i) {
      if (gt.data[i] == kUnlabeled) continue;
      const bool g = gt.data[i] == c, p = pred.data[i] == c;
      if (g && p) tp += 1;
      if (g && !p) fn += 1;
      if (!g && p) fp += 1;
    }
    if (tp + fn == 0) continue;
    supported += 1;
    acc_sum += tp / (tp + fn);
    iou_sum += tp / (tp + fn + fp);
  }
  o.pixel_acc = correct / total;
  o.mean_acc = acc_sum / supported;
  o.iou = iou_sum / supported;
  return o;
}

inline ReconMetrics recon_oracle(const LabeledCloud& recon, const LabeledCloud& gt, double threshold) {
  auto nearest = [](const Eigen::Vector3d& q, const LabeledCloud& cloud) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : cloud) best = std::min(best, (p.position - q).norm());
    return best;
  };
  ReconMetrics m;
  m.threshold = threshold;
  double sum = 0;
  for (const auto& p : recon) sum += nearest(p.position, gt);
  m.accuracy = sum / recon.size();
  double covered = 0;
  for (const auto& p : gt) {
    if (nearest(p.position, recon) <= threshold) covered += 1;
  }
  m.completeness = covered / gt.size();
  return m;
}

}  // namespace sparsefuse::testing
