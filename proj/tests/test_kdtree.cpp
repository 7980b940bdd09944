#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "sparsefuse/error.hpp"
#include "sparsefuse/kdtree.hpp"
#include "support.hpp"

namespace sf = sparsefuse;
namespace simd = sparsefuse::simd;

namespace {

double dist_sq(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  const double dx = a.x() - b.x(), dy = a.y() - b.y(), dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

// Clouds with many exact duplicates and points on a coarse lattice so ties
// are common.
sf::LabeledCloud tie_heavy_cloud(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<int> cell(0, 6);
  std::uniform_int_distribution<int> lab(0, 2);
  sf::LabeledCloud c(n);
  for (auto& p : c) {
    p.position = 0.1 * Eigen::Vector3d(cell(rng), cell(rng), cell(rng));
    p.color = Eigen::Vector3d::Constant(0.25 * lab(rng));
    p.label = static_cast<sf::Label>(lab(rng));
  }
  return c;
}

std::vector<simd::Isa> isas() {
  std::vector<simd::Isa> out{simd::Isa::kScalar};
  if (simd::isa_available(simd::Isa::kAvx2)) out.push_back(simd::Isa::kAvx2);
  return out;
}

class IsaScope {
 public:
  explicit IsaScope(simd::Isa isa) : before_(simd::active_isa()) { simd::force_isa(isa); }
  ~IsaScope() { simd::force_isa(before_); }

 private:
  simd::Isa before_;
};

}  // namespace

TEST(KdTree, EmptyTree) {
  sf::KdTree t(sf::LabeledCloud{});
  EXPECT_TRUE(t.empty());
  EXPECT_FALSE(t.nearest({0, 0, 0}).has_value());
  EXPECT_EQ(t.count_within({0, 0, 0}, 1.0, 10), 0u);
  EXPECT_TRUE(t.radius_search({0, 0, 0}, 1.0).empty());
}

TEST(KdTree, RejectsNonFinitePositions) {
  sf::LabeledCloud c(3);
  c[1].position.x() = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(sf::KdTree{c}, sf::InvalidInput);
}

TEST(KdTree, NearestMatchesBruteForce) {
  for (auto isa : isas()) {
    IsaScope scope(isa);
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 30; ++trial) {
      const std::size_t n = 1 + rng() % 3000;
      const auto cloud = trial % 2 ? sf::testing::random_cloud(rng, n, 2.0, 3) : tie_heavy_cloud(rng, n);
      sf::KdTree tree(cloud);
      std::uniform_real_distribution<double> q(-0.5, 2.5);
      for (int k = 0; k < 200; ++k) {
        const Eigen::Vector3d query = k % 4 == 0 ? cloud[rng() % n].position : Eigen::Vector3d(q(rng), q(rng), q(rng));
        std::size_t best = 0;
        double best_d = dist_sq(query, cloud[0].position);
        for (std::size_t i = 1; i < n; ++i) {
          const double d = dist_sq(query, cloud[i].position);
          if (d < best_d) {
            best_d = d;
            best = i;
          }
        }
        const auto got = tree.nearest(query);
        ASSERT_TRUE(got.has_value());
        ASSERT_EQ(got->index, best) << simd::isa_name(isa);
        ASSERT_EQ(got->dist_sq, best_d);
      }
    }
  }
}

TEST(KdTree, RadiusQueriesMatchBruteForce) {
  for (auto isa : isas()) {
    IsaScope scope(isa);
    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t n = 1 + rng() % 2000;
      const auto cloud = trial % 2 ? sf::testing::random_cloud(rng, n, 1.0, 2) : tie_heavy_cloud(rng, n);
      sf::KdTree tree(cloud);
      for (int k = 0; k < 50; ++k) {
        const Eigen::Vector3d query = cloud[rng() % n].position;
        // 0.1 hits lattice points exactly on the boundary.
        const double radius = k % 2 ? 0.1 : 0.137;
        std::vector<std::size_t> expect;
        for (std::size_t i = 0; i < n; ++i) {
          if (dist_sq(query, cloud[i].position) <= radius * radius) expect.push_back(i);
        }
        EXPECT_EQ(tree.radius_search(query, radius), expect);
        EXPECT_EQ(tree.count_within(query, radius, n + 1), expect.size());
        EXPECT_EQ(tree.count_within(query, radius, 3), std::min<std::size_t>(3, expect.size()));
      }
    }
  }
}

TEST(KdTree, LiftedSearchMatchesBruteForce) {
  for (auto isa : isas()) {
    IsaScope scope(isa);
    std::mt19937_64 rng(23);
    const std::vector<simd::LiftedWeights> weights = {
        {0, 0, simd::SemanticTerm::kIndicator},   {0.1, 10, simd::SemanticTerm::kIndicator},
        {1, 0, simd::SemanticTerm::kIndicator},   {0, 1, simd::SemanticTerm::kIndicator},
        {0.1, 1, simd::SemanticTerm::kSquaredDiff}};
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t n = 1 + rng() % 2000;
      const auto cloud = trial % 2 ? sf::testing::random_cloud(rng, n, 1.0, 4) : tie_heavy_cloud(rng, n);
      sf::KdTree tree(cloud);
      for (const auto& w : weights) {
        for (int k = 0; k < 40; ++k) {
          const auto& s = cloud[rng() % n];
          const simd::LiftedQuery q{s.position.x() + 0.01, s.position.y(), s.position.z() - 0.02,
                                    0.5, 0.25, 0.0, static_cast<std::int32_t>(k % 4)};
          const double max_sq = k % 3 == 0 ? std::numeric_limits<double>::infinity() : 0.15 * 0.15;
          std::optional<std::size_t> best;
          double best_cost = 0;
          for (std::size_t i = 0; i < n; ++i) {
            const auto& p = cloud[i];
            const double dx = q.x - p.position.x(), dy = q.y - p.position.y(), dz = q.z - p.position.z();
            const double g = dx * dx + dy * dy + dz * dz;
            if (g > max_sq) continue;
            const double dr = q.r - p.color.x(), dg = q.g - p.color.y(), db = q.b - p.color.z();
            const double c = dr * dr + dg * dg + db * db;
            const double sem = sf::testing::semantic_term(static_cast<sf::Label>(q.label), p.label, w.term);
            const double cost = g + w.photometric * c + w.semantic * sem;
            if (!best || cost < best_cost) {
              best = i;
              best_cost = cost;
            }
          }
          const auto got = tree.nearest_lifted(q, w, max_sq);
          ASSERT_EQ(got.has_value(), best.has_value());
          if (best) {
            ASSERT_EQ(got->index, *best);
            ASSERT_EQ(got->cost, best_cost);
          }
        }
      }
    }
  }
}

TEST(KdTree, PositionOnlyConstructor) {
  std::vector<Eigen::Vector3d> pts = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  sf::KdTree t{std::span<const Eigen::Vector3d>(pts)};
  EXPECT_EQ(t.size(), 3u);
  EXPECT_EQ(t.nearest({0.9, 0.2, 0})->index, 1u);
}
