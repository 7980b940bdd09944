#include "sparsefuse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sparsefuse/error.hpp"
#include "sparsefuse/kdtree.hpp"

namespace sparsefuse {
namespace {

// Neumaier-compensated sum; results do not depend on anything but the input
// order, which is fixed by the raster/cloud layout.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0;
  double comp_ = 0;
};

bool usable(float d) { return std::isfinite(d) && d > 0.0f; }

}  // namespace

DepthMetrics depth_metrics(const DepthRaster& pred, const DepthRaster& gt, const std::vector<double>& thresholds) {
  if (!pred.same_shape(gt.width, gt.height)) {
    std::ostringstream os;
    os << "depth rasters differ in shape: " << pred.width << "x" << pred.height << " vs " << gt.width << "x"
       << gt.height;
    throw InvalidInput(os.str());
  }
  for (double t : thresholds) {
    if (!(t > 0) || !std::isfinite(t)) throw InvalidInput("delta thresholds must be positive and finite");
  }

  CompensatedSum rel, log10, sq;
  std::vector<std::size_t> hits(thresholds.size(), 0);
  std::size_t count = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!usable(pred.data[i]) || !usable(gt.data[i])) continue;
    const double d = pred.data[i];
    const double g = gt.data[i];
    rel.add(std::abs(d - g) / g);
    log10.add(std::abs(std::log10(d) - std::log10(g)));
    sq.add((d - g) * (d - g));
    const double ratio = std::max(g / d, d / g);
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
      if (ratio < thresholds[t]) ++hits[t];
    }
    ++count;
  }
  if (count == 0) throw UndefinedMetrics("no pixel has a valid depth in both rasters");

  const double n = static_cast<double>(count);
  DepthMetrics m;
  m.valid_pixels = count;
  m.rel = rel.value() / n;
  m.log10 = log10.value() / n;
  m.rms = std::sqrt(sq.value() / n);
  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    m.delta.push_back({thresholds[t], static_cast<double>(hits[t]) / n});
  }
  return m;
}

SegMetrics seg_metrics(const LabelRaster& pred, const LabelRaster& gt, std::size_t num_classes) {
  if (!pred.same_shape(gt.width, gt.height)) {
    std::ostringstream os;
    os << "label rasters differ in shape: " << pred.width << "x" << pred.height << " vs " << gt.width << "x"
       << gt.height;
    throw InvalidInput(os.str());
  }
  if (num_classes == 0 || num_classes > kUnlabeled) throw InvalidInput("class count must be in [1, 65535]");

  // Rows: ground truth; columns: prediction, with one extra column for
  // predictions outside the class range.
  const std::size_t cols = num_classes + 1;
  std::vector<std::size_t> confusion(num_classes * cols, 0);
  std::size_t total = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const Label g = gt.data[i];
    if (g == kUnlabeled) continue;
    if (g >= num_classes) {
      throw InvalidInput("ground-truth label " + std::to_string(g) + " outside [0, " +
                         std::to_string(num_classes) + ")");
    }
    const Label p = pred.data[i];
    const std::size_t col = p < num_classes ? p : num_classes;
    ++confusion[g * cols + col];
    ++total;
  }

  SegMetrics m;
  std::size_t diag_total = 0;
  CompensatedSum acc_sum, iou_sum;
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::size_t row = 0;
    for (std::size_t j = 0; j < cols; ++j) row += confusion[c * cols + j];
    if (row == 0) continue;
    std::size_t col = 0;
    for (std::size_t r = 0; r < num_classes; ++r) col += confusion[r * cols + c];
    const std::size_t diag = confusion[c * cols + c];
    diag_total += diag;
    const double acc = static_cast<double>(diag) / static_cast<double>(row);
    const double iou = static_cast<double>(diag) / static_cast<double>(row + col - diag);
    m.per_class.push_back({static_cast<Label>(c), row, acc, iou});
    acc_sum.add(acc);
    iou_sum.add(iou);
  }
  if (m.per_class.empty()) throw UndefinedMetrics("ground truth has no labeled pixel");

  const double k = static_cast<double>(m.per_class.size());
  m.evaluated_pixels = total;
  m.pixel_acc = static_cast<double>(diag_total) / static_cast<double>(total);
  m.mean_acc = acc_sum.value() / k;
  m.iou = iou_sum.value() / k;
  return m;
}

ReconMetrics recon_metrics(const LabeledCloud& recon, const LabeledCloud& gt, double threshold) {
  if (recon.empty() || gt.empty()) throw UndefinedMetrics("reconstruction metrics need two non-empty clouds");
  if (!(threshold >= 0) || !std::isfinite(threshold)) throw InvalidInput("threshold must be finite and >= 0");

  const KdTree gt_tree(gt);
  CompensatedSum dist;
  for (const auto& p : recon) dist.add(std::sqrt(gt_tree.nearest(p.position)->dist_sq));

  const KdTree recon_tree(recon);
  std::size_t covered = 0;
  for (const auto& p : gt) {
    if (std::sqrt(recon_tree.nearest(p.position)->dist_sq) <= threshold) ++covered;
  }

  ReconMetrics m;
  m.threshold = threshold;
  m.accuracy = dist.value() / static_cast<double>(recon.size());
  m.completeness = static_cast<double>(covered) / static_cast<double>(gt.size());
  return m;
}

}  // namespace sparsefuse
