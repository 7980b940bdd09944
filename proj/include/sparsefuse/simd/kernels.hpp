#pragma once

// Data-parallel inner loops shared by the spatial index, the correspondence
// search and the plane pre-filter. Each kernel has a scalar reference
// implementation and, where the CPU supports it, an AVX2 variant. All
// variants evaluate the same expression tree per element without fused
// multiply-add, so their outputs are bit-identical to the scalar reference.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace sparsefuse::simd {

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa);

// Structure-of-arrays block of lifted points.
struct PointBlock {
  const double* x = nullptr;
  const double* y = nullptr;
  const double* z = nullptr;
  const double* r = nullptr;
  const double* g = nullptr;
  const double* b = nullptr;
  const std::int32_t* label = nullptr;
  std::size_t size = 0;
};

struct LiftedQuery {
  double x, y, z;
  double r, g, b;
  std::int32_t label;
};

enum class SemanticTerm : std::uint8_t {
  kIndicator,      // 0 for equal labels, 1 otherwise
  kSquaredDiff,    // (s - s')^2 on the numeric ids
};

struct LiftedWeights {
  double photometric = 0;  // w1
  double semantic = 0;     // w2
  SemanticTerm term = SemanticTerm::kIndicator;
};

struct KernelTable {
  // geom_sq[i] = |dxyz|^2
  // cost[i]    = geom_sq[i] + w1 |drgb|^2 + w2 sem(label, label_i)
  void (*lifted_cost)(const LiftedQuery& q, const PointBlock& block, const LiftedWeights& w,
                      double* geom_sq, double* cost);
  // out[i] = |q - p_i|^2
  void (*squared_distance)(const double q[3], const double* x, const double* y, const double* z,
                           std::size_t n, double* out);
  // out[i] = |n . p_i + d|
  void (*plane_distance)(const double normal[3], double offset, const double* x, const double* y,
                         const double* z, std::size_t n, double* out);
};

bool isa_available(Isa isa);

// Table for a specific ISA. Throws InvalidInput when it is not available on
// this CPU or was not compiled in.
const KernelTable& kernels(Isa isa);

// Table selected at startup: the widest available ISA.
const KernelTable& kernels();
Isa active_isa();

// Overrides the runtime selection (testing and benchmarking).
void force_isa(Isa isa);

}  // namespace sparsefuse::simd
