#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "sparsefuse/registration.hpp"

namespace sparsefuse {

LabeledCloud fuse(const std::vector<LabeledCloud>& clouds, double voxel) {
  if (!(voxel > 0) || !std::isfinite(voxel)) throw InvalidInput("fusion voxel size must be positive");

  struct Entry {
    std::array<std::int64_t, 3> cell;
    Label label;
    const LabeledPoint* point;
  };
  std::vector<Entry> entries;
  std::size_t total = 0;
  for (const auto& c : clouds) total += c.size();
  entries.reserve(total);

  constexpr double kCellLimit = 4.0e18;
  for (const auto& cloud : clouds) {
    for (const auto& p : cloud) {
      Entry e{{}, p.label, &p};
      for (int d = 0; d < 3; ++d) {
        const double c = std::floor(p.position[d] / voxel);
        if (!(std::abs(c) < kCellLimit)) throw InvalidInput("point outside the representable fusion grid");
        e.cell[d] = static_cast<std::int64_t>(c);
      }
      entries.push_back(e);
    }
  }
  // Stable: points inside a group keep their input order, so the sums below
  // are accumulated in a fixed order.
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.cell != b.cell) return a.cell < b.cell;
    return a.label < b.label;
  });

  LabeledCloud out;
  for (std::size_t i = 0; i < entries.size();) {
    std::size_t j = i;
    Eigen::Vector3d pos = Eigen::Vector3d::Zero();
    Eigen::Vector3d rgb = Eigen::Vector3d::Zero();
    while (j < entries.size() && entries[j].cell == entries[i].cell && entries[j].label == entries[i].label) {
      pos += entries[j].point->position;
      rgb += entries[j].point->color;
      ++j;
    }
    const double n = static_cast<double>(j - i);
    LabeledPoint merged;
    merged.position = pos / n;
    merged.color = rgb / n;
    merged.label = entries[i].label;
    out.push_back(merged);
    i = j;
  }
  return out;
}

}  // namespace sparsefuse
