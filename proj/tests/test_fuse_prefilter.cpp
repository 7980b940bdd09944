#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "sparsefuse/error.hpp"
#include "sparsefuse/registration.hpp"
#include "support.hpp"

namespace sf = sparsefuse;

namespace {

sf::LabeledPoint point(const Eigen::Vector3d& p, sf::Label label) {
  sf::LabeledPoint out;
  out.position = p;
  out.color = {0.1, 0.2, 0.3};
  out.label = label;
  return out;
}

// Jittered samples of an axis-aligned rectangle; `axis` is the normal.
sf::LabeledCloud rectangle(std::mt19937_64& rng, std::size_t n, int axis, double level, double lo, double hi,
                           sf::Label label) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::uniform_real_distribution<double> jitter(-0.005, 0.005);
  sf::LabeledCloud out;
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::Vector3d p(u(rng), u(rng), u(rng));
    p[axis] = level + jitter(rng);
    out.push_back(point(p, label));
  }
  return out;
}

}  // namespace

TEST(Fuse, TwoPointMean) {
  const sf::LabeledCloud a = {point({0, 0, 1}, 3)};
  const sf::LabeledCloud b = {point({0, 0, 1.004}, 3)};
  const auto out = sf::fuse({a, b}, 0.01);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_NEAR(out[0].position.z(), 1.002, 1e-15);
  EXPECT_EQ(out[0].position.x(), 0.0);
  EXPECT_EQ(out[0].label, 3);
}

TEST(Fuse, LabelsNeverMerge) {
  const sf::LabeledCloud a = {point({0.001, 0, 1}, 3), point({0.002, 0, 1}, 4)};
  const auto out = sf::fuse({a}, 0.01);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].label, 3);
  EXPECT_EQ(out[1].label, 4);
}

TEST(Fuse, SelfFusionEqualsSinglePass) {
  std::mt19937_64 rng(71);
  const auto c = sf::testing::random_cloud(rng, 5000, 0.3, 3);
  const auto once = sf::fuse({c}, 0.02);
  const auto twice = sf::fuse({c, c}, 0.02);
  ASSERT_EQ(once.size(), twice.size());
  for (std::size_t i = 0; i < once.size(); ++i) {
    EXPECT_LT((once[i].position - twice[i].position).norm(), 1e-15);
    EXPECT_EQ(once[i].label, twice[i].label);
  }
}

TEST(Fuse, MatchesGroupingOracle) {
  std::mt19937_64 rng(72);
  const auto a = sf::testing::random_cloud(rng, 3000, 0.5, 3);
  const auto b = sf::testing::random_cloud(rng, 2000, 0.5, 3);
  const double voxel = 0.05;
  std::map<std::tuple<long, long, long, int>, std::pair<Eigen::Vector3d, int>> groups;
  for (const auto* cloud : {&a, &b}) {
    for (const auto& p : *cloud) {
      const auto key = std::make_tuple(static_cast<long>(std::floor(p.position.x() / voxel)),
                                       static_cast<long>(std::floor(p.position.y() / voxel)),
                                       static_cast<long>(std::floor(p.position.z() / voxel)), int{p.label});
      auto& g = groups[key];
      if (g.second == 0) g.first.setZero();
      g.first += p.position;
      ++g.second;
    }
  }
  const auto out = sf::fuse({a, b}, voxel);
  ASSERT_EQ(out.size(), groups.size());
  std::size_t i = 0;
  for (const auto& [key, g] : groups) {
    EXPECT_EQ(out[i].label, std::get<3>(key));
    EXPECT_LT((out[i].position - g.first / g.second).norm(), 1e-12);
    // Means stay inside their cell.
    EXPECT_EQ(static_cast<long>(std::floor(out[i].position.x() / voxel + 1e-9)), std::get<0>(key));
    ++i;
  }
}

TEST(Fuse, OutputIsWithinInputBoundingBox) {
  std::mt19937_64 rng(73);
  const auto c = sf::testing::random_cloud(rng, 2000, 1.0, 2);
  Eigen::Vector3d lo = c[0].position, hi = c[0].position;
  for (const auto& p : c) {
    lo = lo.cwiseMin(p.position);
    hi = hi.cwiseMax(p.position);
  }
  for (const auto& p : sf::fuse({c}, 0.1)) {
    EXPECT_TRUE((p.position.array() >= lo.array() - 1e-12).all());
    EXPECT_TRUE((p.position.array() <= hi.array() + 1e-12).all());
  }
}

TEST(Fuse, RejectsBadVoxel) {
  EXPECT_THROW(sf::fuse({}, 0.0), sf::InvalidInput);
  EXPECT_THROW(sf::fuse({}, -1.0), sf::InvalidInput);
  EXPECT_TRUE(sf::fuse({}, 0.01).empty());
}

TEST(PlanePrefilter, SinglePlaneUnchanged) {
  std::mt19937_64 rng(81);
  const auto c = rectangle(rng, 3000, 2, 1.0, -1.0, 1.0, 1);
  const auto r = sf::plane_prefilter(c, 0.03, 30);
  EXPECT_EQ(r.cloud, c);
  EXPECT_EQ(r.removed, 0u);
  ASSERT_GE(r.planes.size(), 1u);
  EXPECT_NEAR(std::abs(r.planes[0].normal.z()), 1.0, 1e-3);
}

TEST(PlanePrefilter, RemovesExactlyTheIsolatedOutliers) {
  std::mt19937_64 rng(82);
  auto c = rectangle(rng, 10000, 2, 0.0, -2.0, 2.0, 1);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::set<std::size_t> outliers;
  for (int i = 0; i < 50; ++i) {
    // 1 m off the plane, spread out so none has company within 0.1 m.
    const double x = -1.96 + 0.08 * i;
    outliers.insert(c.size());
    c.push_back(point({x, u(rng), 1.0}, 2));
  }
  std::shuffle(c.begin(), c.end(), rng);
  const auto r = sf::plane_prefilter(c, 0.03, 100);
  EXPECT_EQ(r.removed, 50u);
  EXPECT_EQ(r.cloud.size(), 10000u);
  for (const auto& p : r.cloud) EXPECT_EQ(p.label, 1);
}

TEST(PlanePrefilter, WallsAndFloorUnchanged) {
  std::mt19937_64 rng(83);
  auto c = rectangle(rng, 4000, 0, -1.0, -1.0, 1.0, 3);
  const auto wall2 = rectangle(rng, 4000, 2, -1.0, -1.0, 1.0, 3);
  const auto floor = rectangle(rng, 4000, 1, 1.0, -1.0, 1.0, 1);
  c.insert(c.end(), wall2.begin(), wall2.end());
  c.insert(c.end(), floor.begin(), floor.end());
  const auto r = sf::plane_prefilter(c, 0.03, 120);
  EXPECT_EQ(r.cloud, c);
  EXPECT_GE(r.planes.size(), 3u);
}

TEST(PlanePrefilter, KeepsDenseOffPlaneStructure) {
  std::mt19937_64 rng(84);
  auto c = rectangle(rng, 5000, 1, 1.0, -1.0, 1.0, 1);
  std::normal_distribution<double> g(0.0, 0.05);
  for (int i = 0; i < 200; ++i) c.push_back(point({g(rng), 0.5 + g(rng), g(rng)}, 5));
  sf::RegistrationParams p;
  p.max_planes = 1;
  const auto r = sf::plane_prefilter(c, 0.03, 50, p);
  // The cluster is off-plane but dense; only its sparse fringe may go.
  const auto kept = std::count_if(r.cloud.begin(), r.cloud.end(), [](const auto& q) { return q.label == 5; });
  EXPECT_GT(kept, 150);
  EXPECT_EQ(r.cloud.size() + r.removed, c.size());
}

TEST(PlanePrefilter, DeterministicForAFixedSeed) {
  std::mt19937_64 rng(85);
  auto c = rectangle(rng, 3000, 2, 0.0, -1.0, 1.0, 1);
  const auto extra = sf::testing::random_cloud(rng, 300, 2.0, 3);
  c.insert(c.end(), extra.begin(), extra.end());
  const auto a = sf::plane_prefilter(c, 0.03, 30);
  const auto b = sf::plane_prefilter(c, 0.03, 30);
  EXPECT_EQ(a.cloud, b.cloud);
  EXPECT_EQ(a.removed, b.removed);
}
