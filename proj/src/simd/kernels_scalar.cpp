#include <cmath>

#include "kernels_impl.hpp"

namespace sparsefuse::simd::scalar {

void lifted_cost(const LiftedQuery& q, const PointBlock& block, const LiftedWeights& w,
                 double* geom_sq, double* cost) {
  const bool indicator = w.term == SemanticTerm::kIndicator;
  const double qlabel = static_cast<double>(q.label);
  for (std::size_t i = 0; i < block.size; ++i) {
    const double dx = q.x - block.x[i];
    const double dy = q.y - block.y[i];
    const double dz = q.z - block.z[i];
    const double g = dx * dx + dy * dy + dz * dz;

    const double dr = q.r - block.r[i];
    const double dg = q.g - block.g[i];
    const double db = q.b - block.b[i];
    const double c = dr * dr + dg * dg + db * db;

    double s;
    if (indicator) {
      s = block.label[i] == q.label ? 0.0 : 1.0;
    } else {
      const double ds = qlabel - static_cast<double>(block.label[i]);
      s = ds * ds;
    }
    geom_sq[i] = g;
    cost[i] = g + w.photometric * c + w.semantic * s;
  }
}

void squared_distance(const double q[3], const double* x, const double* y, const double* z,
                      std::size_t n, double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = q[0] - x[i];
    const double dy = q[1] - y[i];
    const double dz = q[2] - z[i];
    out[i] = dx * dx + dy * dy + dz * dz;
  }
}

void plane_distance(const double normal[3], double offset, const double* x, const double* y,
                    const double* z, std::size_t n, double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double s = normal[0] * x[i] + normal[1] * y[i] + normal[2] * z[i] + offset;
    out[i] = std::fabs(s);
  }
}

const KernelTable kTable{&lifted_cost, &squared_distance, &plane_distance};

}  // namespace sparsefuse::simd::scalar
