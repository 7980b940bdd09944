#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "sparsefuse/error.hpp"
#include "sparsefuse/geometry.hpp"
#include "support.hpp"

namespace sf = sparsefuse;
using sf::testing::frobenius;
using sf::testing::random_cloud;
using sf::testing::random_transform;

namespace {

sf::View flat_view(const sf::Intrinsics& k, float depth, sf::Label label = 4) {
  sf::View v;
  v.intrinsics = k;
  v.depth = sf::DepthRaster(k.width, k.height, depth);
  v.labels = sf::LabelRaster(k.width, k.height, label);
  v.color = sf::ColorRaster(k.width, k.height, Eigen::Vector3f(0.25f, 0.5f, 0.75f));
  return v;
}

}  // namespace

TEST(Unproject, PrincipalRay) {
  const sf::Intrinsics k{100, 100, 2, 1, 4, 3};
  auto v = flat_view(k, 0.0f);
  v.depth.at(2, 1) = 2.0f;
  const auto cloud = sf::unproject(v);
  ASSERT_EQ(cloud.size(), 1u);
  EXPECT_EQ(cloud[0].position, Eigen::Vector3d(0, 0, 2.0));
  EXPECT_EQ(cloud[0].label, 4);
}

TEST(Unproject, UnitTangent) {
  const sf::Intrinsics k{2, 2, 1, 1, 4, 3};
  auto v = flat_view(k, 0.0f);
  v.depth.at(3, 1) = 1.5f;
  const auto cloud = sf::unproject(v);
  ASSERT_EQ(cloud.size(), 1u);
  EXPECT_DOUBLE_EQ(cloud[0].position.x(), 1.5);
  EXPECT_DOUBLE_EQ(cloud[0].position.y(), 0.0);
  EXPECT_DOUBLE_EQ(cloud[0].position.z(), 1.5);
}

TEST(Unproject, FourByFourPinholeTable) {
  const sf::Intrinsics k{3.0, 4.0, 1.5, 2.0, 4, 4};
  auto v = flat_view(k, 0.0f);
  const float depths[16] = {1.0f, 2.0f, 0.5f, 3.0f, 1.25f, 0.75f, 4.0f, 2.5f,
                            1.0f, 1.0f, 2.0f, 2.0f, 0.25f, 8.0f, 1.5f, 3.5f};
  for (int i = 0; i < 16; ++i) v.depth.data[i] = depths[i];
  const auto cloud = sf::unproject(v);
  ASSERT_EQ(cloud.size(), 16u);
  for (int vv = 0; vv < 4; ++vv) {
    for (int u = 0; u < 4; ++u) {
      const double d = depths[vv * 4 + u];
      const auto& p = cloud[vv * 4 + u].position;
      EXPECT_DOUBLE_EQ(p.x(), (u - 1.5) * d / 3.0);
      EXPECT_DOUBLE_EQ(p.y(), (vv - 2.0) * d / 4.0);
      EXPECT_DOUBLE_EQ(p.z(), d);
    }
  }
}

TEST(Unproject, SkipsInvalidDepthAndUnlabeledPixels) {
  const sf::Intrinsics k{10, 10, 1, 1, 3, 2};
  auto v = flat_view(k, 1.0f);
  v.depth.at(0, 0) = 0.0f;
  v.depth.at(1, 0) = -1.0f;
  v.depth.at(2, 0) = std::numeric_limits<float>::quiet_NaN();
  v.depth.at(0, 1) = std::numeric_limits<float>::infinity();
  v.labels.at(1, 1) = sf::kUnlabeled;
  const auto cloud = sf::unproject(v);
  ASSERT_EQ(cloud.size(), 1u);
  EXPECT_DOUBLE_EQ(cloud[0].position.x(), (2 - 1) * 1.0 / 10);
  EXPECT_FLOAT_EQ(static_cast<float>(cloud[0].color.z()), 0.75f);
}

TEST(Unproject, RejectsShapeMismatch) {
  const sf::Intrinsics k{10, 10, 1, 1, 3, 2};
  auto v = flat_view(k, 1.0f);
  v.labels = sf::LabelRaster(2, 2, 0);
  EXPECT_THROW(sf::unproject(v), sf::InvalidInput);
  auto w = flat_view(k, 1.0f);
  w.intrinsics.fx = 0;
  EXPECT_THROW(sf::unproject(w), sf::InvalidInput);
}

TEST(Project, InvertsUnproject) {
  const sf::Intrinsics k{525, 520, 319.5, 239.5, 640, 480};
  for (double u : {0.0, 100.25, 639.0}) {
    for (double v : {0.0, 240.5, 479.0}) {
      const auto p = sf::unproject_pixel(k, u, v, 2.75);
      const auto px = sf::project(k, p);
      EXPECT_NEAR(px.x(), u, 1e-9);
      EXPECT_NEAR(px.y(), v, 1e-9);
    }
  }
}

TEST(ApplyTransform, Identity) {
  std::mt19937_64 rng(1);
  const auto c = random_cloud(rng, 50, 2.0, 3);
  EXPECT_EQ(sf::apply_transform(c, sf::RigidTransform::identity()), c);
}

TEST(ApplyTransform, QuarterTurnAboutZ) {
  sf::LabeledCloud c(1);
  c[0].position = {1, 0, 0};
  const auto t = sf::RigidTransform::from_axis_angle(Eigen::Vector3d::UnitZ(), std::numbers::pi / 2);
  const auto out = sf::apply_transform(c, t);
  EXPECT_NEAR(out[0].position.x(), 0.0, 1e-15);
  EXPECT_NEAR(out[0].position.y(), 1.0, 1e-15);
  EXPECT_NEAR(out[0].position.z(), 0.0, 1e-15);
}

TEST(ApplyTransform, InverseRestores) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto c = random_cloud(rng, 100, 3.0, 5);
    const auto t = random_transform(rng, 5.0);
    const auto back = sf::apply_transform(sf::apply_transform(c, t), t.inverse());
    for (std::size_t i = 0; i < c.size(); ++i) {
      EXPECT_LT((back[i].position - c[i].position).norm(), 1e-9);
      EXPECT_EQ(back[i].color, c[i].color);
      EXPECT_EQ(back[i].label, c[i].label);
    }
  }
}

TEST(RigidTransform, CompositionAndAngle) {
  std::mt19937_64 rng(3);
  const auto a = random_transform(rng, 1.0);
  const auto b = random_transform(rng, 1.0);
  const Eigen::Vector3d p(0.3, -0.2, 1.7);
  EXPECT_LT(((a * b)(p) - a(b(p))).norm(), 1e-12);
  EXPECT_TRUE((a * b).is_proper(1e-9));
  const auto r = sf::RigidTransform::from_axis_angle(Eigen::Vector3d(1, 2, 3), 0.7);
  EXPECT_NEAR(r.angle(), 0.7, 1e-12);
  const auto tiny = sf::RigidTransform::from_axis_angle(Eigen::Vector3d(0, 1, 0), 1e-9);
  EXPECT_NEAR(tiny.angle(), 1e-9, 1e-15);
  EXPECT_NEAR(sf::RigidTransform::from_axis_angle(Eigen::Vector3d::UnitX(), std::numbers::pi).angle(),
              std::numbers::pi, 1e-9);
  const auto err = sf::pose_error(a, a * sf::RigidTransform::from_axis_angle(Eigen::Vector3d::UnitZ(), 0.1));
  EXPECT_NEAR(err.rotation_rad, 0.1, 1e-12);
}

TEST(SolveRigid, IdentityWhenSourceEqualsTarget) {
  std::mt19937_64 rng(4);
  const auto c = random_cloud(rng, 30, 1.0, 1);
  std::vector<sf::PointPair> pairs;
  for (const auto& p : c) pairs.push_back({p.position, p.position});
  const auto t = sf::solve_rigid(pairs);
  EXPECT_LT(frobenius(t.rotation, Eigen::Matrix3d::Identity()), 1e-12);
  EXPECT_LT(t.translation.norm(), 1e-12);
}

TEST(SolveRigid, PureTranslation) {
  std::mt19937_64 rng(5);
  const auto c = random_cloud(rng, 30, 1.0, 1);
  std::vector<sf::PointPair> pairs;
  for (const auto& p : c) pairs.push_back({p.position, p.position + Eigen::Vector3d(1, 0, 0)});
  const auto t = sf::solve_rigid(pairs);
  EXPECT_LT(frobenius(t.rotation, Eigen::Matrix3d::Identity()), 1e-12);
  EXPECT_LT((t.translation - Eigen::Vector3d(1, 0, 0)).norm(), 1e-12);
}

TEST(SolveRigid, RecoversRandomTransforms) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const auto c = random_cloud(rng, 100, 2.0, 1);
    const auto truth = random_transform(rng, 3.0);
    std::vector<sf::PointPair> pairs;
    for (const auto& p : c) pairs.push_back({p.position, truth(p.position)});
    const auto t = sf::solve_rigid(pairs);
    EXPECT_LT(frobenius(t.rotation, truth.rotation), 1e-9);
    EXPECT_LT((t.translation - truth.translation).norm(), 1e-9);
    EXPECT_TRUE(t.is_proper(1e-9));
  }
}

TEST(SolveRigid, NeverReturnsAReflection) {
  // Target is the mirror image of a planar-ish source; the best proper
  // rotation must still have determinant +1.
  std::mt19937_64 rng(7);
  const auto c = random_cloud(rng, 40, 1.0, 1);
  std::vector<sf::PointPair> pairs;
  for (const auto& p : c) pairs.push_back({p.position, Eigen::Vector3d(-p.position.x(), p.position.y(), p.position.z())});
  const auto t = sf::solve_rigid(pairs);
  EXPECT_NEAR(t.rotation.determinant(), 1.0, 1e-12);
}

TEST(SolveRigid, IsALocalMinimumOfTheObjective) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> noise(0.0, 0.01);
  const auto c = random_cloud(rng, 200, 1.0, 1);
  const auto truth = random_transform(rng, 1.0);
  std::vector<sf::PointPair> pairs;
  for (const auto& p : c) {
    pairs.push_back({p.position, truth(p.position) + Eigen::Vector3d(noise(rng), noise(rng), noise(rng))});
  }
  const auto t = sf::solve_rigid(pairs);
  const double base = sf::rigid_objective(pairs, t);
  for (int k = 0; k < 200; ++k) {
    auto probe = random_transform(rng, 1e-3);
    probe = sf::RigidTransform::from_axis_angle(Eigen::AngleAxisd(probe.rotation).axis(), 1e-3, probe.translation);
    EXPECT_GE(sf::rigid_objective(pairs, probe * t), base - 1e-12);
  }
}

TEST(SolveRigid, DegenerateConfigurations) {
  std::vector<sf::PointPair> two = {{{0, 0, 0}, {0, 0, 0}}, {{1, 0, 0}, {1, 0, 0}}};
  EXPECT_THROW(sf::solve_rigid(two), sf::DegenerateGeometry);
  std::vector<sf::PointPair> collinear;
  for (int i = 0; i < 10; ++i) collinear.push_back({{0.1 * i, 0.2 * i, 0.3 * i}, {0.1 * i, 0.2 * i, 0.3 * i}});
  EXPECT_THROW(sf::solve_rigid(collinear), sf::DegenerateGeometry);
  std::vector<sf::PointPair> coincident(5, {{1, 2, 3}, {4, 5, 6}});
  EXPECT_THROW(sf::solve_rigid(coincident), sf::DegenerateGeometry);
}
