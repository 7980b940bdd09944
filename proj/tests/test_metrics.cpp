#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "metric_oracles.hpp"
#include "sparsefuse/error.hpp"
#include "sparsefuse/metrics.hpp"
#include "support.hpp"

namespace sf = sparsefuse;

namespace {

sf::DepthRaster depth(int w, int h, std::vector<float> values) {
  sf::DepthRaster r(w, h);
  r.data = std::move(values);
  return r;
}

sf::LabelRaster labels(int w, int h, std::vector<sf::Label> values) {
  sf::LabelRaster r(w, h);
  r.data = std::move(values);
  return r;
}

}  // namespace

TEST(DepthMetrics, IdenticalRasters) {
  const auto a = depth(2, 2, {1.0f, 2.0f, 3.5f, 0.25f});
  const auto m = sf::depth_metrics(a, a);
  EXPECT_EQ(m.rel, 0.0);
  EXPECT_EQ(m.log10, 0.0);
  EXPECT_EQ(m.rms, 0.0);
  ASSERT_EQ(m.delta.size(), 3u);
  for (const auto& d : m.delta) EXPECT_EQ(d.fraction, 1.0);
  EXPECT_EQ(m.valid_pixels, 4u);
}

TEST(DepthMetrics, SinglePixelHandValues) {
  const auto m = sf::depth_metrics(depth(1, 1, {2.0f}), depth(1, 1, {1.0f}));
  EXPECT_EQ(m.rel, 1.0);
  EXPECT_EQ(m.rms, 1.0);
  EXPECT_NEAR(m.log10, 0.30103, 1e-5);
  EXPECT_NEAR(m.log10, std::log10(2.0), 1e-15);
  EXPECT_EQ(m.delta[0].fraction, 0.0);
  EXPECT_EQ(m.delta[0].threshold, 1.25);
}

TEST(DepthMetrics, MixedThreePixelCase) {
  const auto pred = depth(3, 1, {1.1f, 2.0f, 4.0f});
  const auto gt = depth(3, 1, {1.0f, 2.5f, 2.0f});
  const auto m = sf::depth_metrics(pred, gt);
  const auto o = sf::testing::depth_oracle(pred, gt, sf::kDefaultDeltaThresholds);
  EXPECT_NEAR(m.rel, o.rel, 1e-12);
  EXPECT_NEAR(m.log10, o.log10, 1e-12);
  EXPECT_NEAR(m.rms, o.rms, 1e-12);
  // Ratios 1.1, 1.25, 2.0: the second sits on the first threshold and fails
  // the strict comparison.
  EXPECT_NEAR(m.delta[0].fraction, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(m.delta[1].fraction, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(m.delta[2].fraction, 2.0 / 3.0, 1e-15);
}

TEST(DepthMetrics, SkipsInvalidPixels) {
  const float nan = std::numeric_limits<float>::quiet_NaN();
  const auto pred = depth(4, 1, {1.0f, 0.0f, nan, 2.0f});
  const auto gt = depth(4, 1, {1.0f, 1.0f, 1.0f, -1.0f});
  const auto m = sf::depth_metrics(pred, gt);
  EXPECT_EQ(m.valid_pixels, 1u);
  EXPECT_THROW(sf::depth_metrics(depth(1, 1, {0.0f}), depth(1, 1, {1.0f})), sf::UndefinedMetrics);
  EXPECT_THROW(sf::depth_metrics(depth(1, 1, {1.0f}), depth(2, 1, {1.0f, 1.0f})), sf::InvalidInput);
  EXPECT_THROW(sf::depth_metrics(pred, gt, {0.0}), sf::InvalidInput);
}

TEST(DepthMetrics, RandomInstancesMatchOracle) {
  std::mt19937_64 rng(91);
  std::uniform_real_distribution<float> d(0.1f, 10.0f);
  std::uniform_int_distribution<int> hole(0, 9);
  for (int trial = 0; trial < 100; ++trial) {
    const int w = 1 + trial % 7, h = 1 + trial % 5;
    sf::DepthRaster pred(w, h), gt(w, h);
    for (std::size_t i = 0; i < gt.size(); ++i) {
      pred.data[i] = hole(rng) == 0 ? 0.0f : d(rng);
      gt.data[i] = d(rng);
    }
    pred.data[0] = gt.data[0];
    const auto m = sf::depth_metrics(pred, gt);
    const auto o = sf::testing::depth_oracle(pred, gt, sf::kDefaultDeltaThresholds);
    EXPECT_NEAR(m.rel, o.rel, 1e-12);
    EXPECT_NEAR(m.log10, o.log10, 1e-12);
    EXPECT_NEAR(m.rms, o.rms, 1e-12);
    for (std::size_t t = 0; t < 3; ++t) EXPECT_NEAR(m.delta[t].fraction, o.delta[t], 1e-12);
  }
}

TEST(SegMetrics, Identical) {
  const auto a = labels(3, 1, {0, 1, 2});
  const auto m = sf::seg_metrics(a, a, 3);
  EXPECT_EQ(m.pixel_acc, 1.0);
  EXPECT_EQ(m.mean_acc, 1.0);
  EXPECT_EQ(m.iou, 1.0);
}

TEST(SegMetrics, HandConfusionMatrix) {
  const auto m = sf::seg_metrics(labels(4, 1, {0, 0, 1, 1}), labels(4, 1, {0, 1, 1, 1}), 2);
  EXPECT_NEAR(m.pixel_acc, 0.75, 1e-15);
  EXPECT_NEAR(m.mean_acc, 5.0 / 6.0, 1e-15);
  EXPECT_NEAR(m.iou, 7.0 / 12.0, 1e-15);
  ASSERT_EQ(m.per_class.size(), 2u);
  EXPECT_EQ(m.per_class[1].support, 3u);
  EXPECT_NEAR(m.per_class[0].iou, 0.5, 1e-15);
}

TEST(SegMetrics, UnlabeledAndOutOfRange) {
  // gt 65535 is skipped; a prediction of 9 with 3 classes is a miss.
  const auto m = sf::seg_metrics(labels(4, 1, {0, 9, 2, 2}), labels(4, 1, {0, 1, sf::kUnlabeled, 2}), 3);
  EXPECT_EQ(m.evaluated_pixels, 3u);
  EXPECT_NEAR(m.pixel_acc, 2.0 / 3.0, 1e-15);
  EXPECT_THROW(sf::seg_metrics(labels(1, 1, {0}), labels(1, 1, {5}), 3), sf::InvalidInput);
  EXPECT_THROW(sf::seg_metrics(labels(1, 1, {0}), labels(1, 1, {sf::kUnlabeled}), 3), sf::UndefinedMetrics);
  EXPECT_THROW(sf::seg_metrics(labels(1, 1, {0}), labels(1, 1, {0}), 0), sf::InvalidInput);
}

TEST(SegMetrics, RandomInstancesMatchOracle) {
  std::mt19937_64 rng(92);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t classes = 2 + trial % 6;
    std::uniform_int_distribution<int> lab(0, static_cast<int>(classes));
    sf::LabelRaster pred(32, 32), gt(32, 32);
    for (std::size_t i = 0; i < gt.size(); ++i) {
      const int g = lab(rng);
      gt.data[i] = g == static_cast<int>(classes) ? sf::kUnlabeled : static_cast<sf::Label>(g);
      pred.data[i] = static_cast<sf::Label>(lab(rng));
    }
    gt.data[0] = 0;
    const auto m = sf::seg_metrics(pred, gt, classes);
    const auto o = sf::testing::seg_oracle(pred, gt, classes);
    EXPECT_NEAR(m.pixel_acc, o.pixel_acc, 1e-12);
    EXPECT_NEAR(m.mean_acc, o.mean_acc, 1e-12);
    EXPECT_NEAR(m.iou, o.iou, 1e-12);
  }
}

TEST(ReconMetrics, IdenticalAndShifted) {
  std::mt19937_64 rng(93);
  const auto gt = sf::testing::random_cloud(rng, 200, 1.0, 2);
  const auto same = sf::recon_metrics(gt, gt, 0.05);
  EXPECT_EQ(same.accuracy, 0.0);
  EXPECT_EQ(same.completeness, 1.0);
  // Shifting a single point by twice the threshold leaves no match.
  const sf::LabeledCloud one = {gt[0]};
  auto moved = one;
  moved[0].position.x() += 0.1;
  const auto m = sf::recon_metrics(moved, one, 0.05);
  EXPECT_EQ(m.completeness, 0.0);
  EXPECT_NEAR(m.accuracy, 0.1, 1e-15);
  EXPECT_THROW(sf::recon_metrics({}, gt, 0.05), sf::UndefinedMetrics);
  EXPECT_THROW(sf::recon_metrics(gt, gt, -1.0), sf::InvalidInput);
}

TEST(ReconMetrics, ShiftedPlanarGridHasZeroCompleteness) {
  sf::LabeledCloud gt;
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 20; ++j) {
      sf::LabeledPoint p;
      p.position = {0.5 * i, 0.5 * j, 1.0};
      gt.push_back(p);
    }
  }
  const auto shifted = sf::apply_transform(gt, sf::RigidTransform::from_axis_angle({0, 0, 1}, 0, {0.2, 0, 0}));
  EXPECT_EQ(sf::recon_metrics(shifted, gt, 0.1).completeness, 0.0);
}

TEST(ReconMetrics, RandomInstancesMatchOracle) {
  std::mt19937_64 rng(94);
  for (int trial = 0; trial < 100; ++trial) {
    const auto recon = sf::testing::random_cloud(rng, 200, 1.0, 1);
    const auto gt = sf::testing::random_cloud(rng, 200, 1.0, 1);
    const double threshold = 0.05 + 0.001 * trial;
    const auto m = sf::recon_metrics(recon, gt, threshold);
    const auto o = sf::testing::recon_oracle(recon, gt, threshold);
    EXPECT_NEAR(m.accuracy, o.accuracy, 1e-12);
    EXPECT_NEAR(m.completeness, o.completeness, 1e-12);
  }
}
