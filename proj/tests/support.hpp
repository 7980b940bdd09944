#pragma once

// Shared fixtures for the unit and acceptance tests: random generators and
// brute-force oracles that avoid every acceleration structure in the library.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "sparsefuse/geometry.hpp"
#include "sparsefuse/registration.hpp"

namespace sparsefuse::testing {

inline RigidTransform random_transform(std::mt19937_64& rng, double max_translation) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  std::uniform_real_distribution<double> t(-max_translation, max_translation);
  RigidTransform out;
  out.rotation = q.toRotationMatrix();
  out.translation = {t(rng), t(rng), t(rng)};
  return out;
}

inline LabeledCloud random_cloud(std::mt19937_64& rng, std::size_t n, double extent, int num_labels) {
  std::uniform_real_distribution<double> pos(0.0, extent);
  std::uniform_real_distribution<double> col(0.0, 1.0);
  std::uniform_int_distribution<int> lab(0, num_labels - 1);
  LabeledCloud out(n);
  for (auto& p : out) {
    p.position = {pos(rng), pos(rng), pos(rng)};
    p.color = {col(rng), col(rng), col(rng)};
    p.label = static_cast<Label>(lab(rng));
  }
  return out;
}

inline double semantic_term(Label a, Label b, simd::SemanticTerm term) {
  if (term == simd::SemanticTerm::kIndicator) return a == b ? 0.0 : 1.0;
  const double d = static_cast<double>(a) - static_cast<double>(b);
  return d * d;
}

struct OracleMatch {
  std::size_t src;
  std::size_t tgt;
  double geom_sq;
  double cost;
};

// Exhaustive scan with the same per-element arithmetic order as the kernels.
inline std::vector<OracleMatch> brute_force_match(const LabeledCloud& src, const LabeledCloud& tgt,
                                                  const RegistrationParams& params) {
  std::vector<OracleMatch> out;
  const double max_sq = params.reject_dist * params.reject_dist;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const auto& s = src[i];
    std::optional<OracleMatch> best;
    for (std::size_t j = 0; j < tgt.size(); ++j) {
      const auto& t = tgt[j];
      const double dx = s.position.x() - t.position.x();
      const double dy = s.position.y() - t.position.y();
      const double dz = s.position.z() - t.position.z();
      const double g = dx * dx + dy * dy + dz * dz;
      if (g > max_sq) continue;
      const double dr = s.color.x() - t.color.x();
      const double dg = s.color.y() - t.color.y();
      const double db = s.color.z() - t.color.z();
      const double c = dr * dr + dg * dg + db * db;
      const double cost = g + params.w1 * c + params.w2 * semantic_term(s.label, t.label, params.semantic_term);
      if (!best || cost < best->cost) best = OracleMatch{i, j, g, cost};
    }
    if (best) out.push_back(*best);
  }
  return out;
}

inline double frobenius(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) { return (a - b).norm(); }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("sparsefuse_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace sparsefuse::testing
