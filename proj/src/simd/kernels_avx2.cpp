// Compiled with -mavx2 only; never with -mfma, which would let the compiler
// contract the products and break bit-equality with the scalar reference.

#include <immintrin.h>

#include <cmath>

#include "kernels_impl.hpp"

namespace sparsefuse::simd::avx2 {
namespace {

inline __m256d square(__m256d v) { return _mm256_mul_pd(v, v); }

inline __m256d sum3(__m256d a, __m256d b, __m256d c) {
  return _mm256_add_pd(_mm256_add_pd(a, b), c);
}

}  // namespace

void lifted_cost(const LiftedQuery& q, const PointBlock& block, const LiftedWeights& w,
                 double* geom_sq, double* cost) {
  const __m256d qx = _mm256_set1_pd(q.x);
  const __m256d qy = _mm256_set1_pd(q.y);
  const __m256d qz = _mm256_set1_pd(q.z);
  const __m256d qr = _mm256_set1_pd(q.r);
  const __m256d qg = _mm256_set1_pd(q.g);
  const __m256d qb = _mm256_set1_pd(q.b);
  const __m256d w1 = _mm256_set1_pd(w.photometric);
  const __m256d w2 = _mm256_set1_pd(w.semantic);
  const __m128i qlabel = _mm_set1_epi32(q.label);
  const __m256d qlabel_d = _mm256_set1_pd(static_cast<double>(q.label));
  const __m128i one = _mm_set1_epi32(1);
  const bool indicator = w.term == SemanticTerm::kIndicator;

  const std::size_t n = block.size;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d g = sum3(square(_mm256_sub_pd(qx, _mm256_loadu_pd(block.x + i))),
                           square(_mm256_sub_pd(qy, _mm256_loadu_pd(block.y + i))),
                           square(_mm256_sub_pd(qz, _mm256_loadu_pd(block.z + i))));
    const __m256d c = sum3(square(_mm256_sub_pd(qr, _mm256_loadu_pd(block.r + i))),
                           square(_mm256_sub_pd(qg, _mm256_loadu_pd(block.g + i))),
                           square(_mm256_sub_pd(qb, _mm256_loadu_pd(block.b + i))));

    const __m128i labels = _mm_loadu_si128(reinterpret_cast<const __m128i*>(block.label + i));
    __m256d s;
    if (indicator) {
      const __m128i equal = _mm_cmpeq_epi32(labels, qlabel);
      s = _mm256_cvtepi32_pd(_mm_andnot_si128(equal, one));
    } else {
      s = square(_mm256_sub_pd(qlabel_d, _mm256_cvtepi32_pd(labels)));
    }

    _mm256_storeu_pd(geom_sq + i, g);
    _mm256_storeu_pd(cost + i, _mm256_add_pd(_mm256_add_pd(g, _mm256_mul_pd(w1, c)),
                                             _mm256_mul_pd(w2, s)));
  }
  if (i < n) {
    PointBlock tail{block.x + i, block.y + i, block.z + i, block.r + i,
                    block.g + i, block.b + i, block.label + i, n - i};
    scalar::kTable.lifted_cost(q, tail, w, geom_sq + i, cost + i);
  }
}

void squared_distance(const double q[3], const double* x, const double* y, const double* z,
                      std::size_t n, double* out) {
  const __m256d qx = _mm256_set1_pd(q[0]);
  const __m256d qy = _mm256_set1_pd(q[1]);
  const __m256d qz = _mm256_set1_pd(q[2]);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, sum3(square(_mm256_sub_pd(qx, _mm256_loadu_pd(x + i))),
                                   square(_mm256_sub_pd(qy, _mm256_loadu_pd(y + i))),
                                   square(_mm256_sub_pd(qz, _mm256_loadu_pd(z + i)))));
  }
  if (i < n) scalar::kTable.squared_distance(q, x + i, y + i, z + i, n - i, out + i);
}

void plane_distance(const double normal[3], double offset, const double* x, const double* y,
                    const double* z, std::size_t n, double* out) {
  const __m256d nx = _mm256_set1_pd(normal[0]);
  const __m256d ny = _mm256_set1_pd(normal[1]);
  const __m256d nz = _mm256_set1_pd(normal[2]);
  const __m256d d = _mm256_set1_pd(offset);
  const __m256d sign = _mm256_set1_pd(-0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d s =
        _mm256_add_pd(sum3(_mm256_mul_pd(nx, _mm256_loadu_pd(x + i)),
                           _mm256_mul_pd(ny, _mm256_loadu_pd(y + i)),
                           _mm256_mul_pd(nz, _mm256_loadu_pd(z + i))),
                      d);
    _mm256_storeu_pd(out + i, _mm256_andnot_pd(sign, s));
  }
  if (i < n) scalar::kTable.plane_distance(normal, offset, x + i, y + i, z + i, n - i, out + i);
}

const KernelTable kTable{&lifted_cost, &squared_distance, &plane_distance};

}  // namespace sparsefuse::simd::avx2
