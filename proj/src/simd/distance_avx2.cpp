#include <immintrin.h>

#include "optknn/simd/distance_kernels.hpp"

namespace optknn::simd {

// Four pool points per step, one per lane. Built with -mavx2 but without
// -mfma: the product and the sum stay separately rounded, as in the scalar
// kernel.
void squared_distances_avx2(std::span<const double> query, const double* pool,
                            std::size_t pool_size, std::size_t stride, double* out) {
  const std::size_t dims = query.size();
  std::size_t m = 0;
  for (; m + 8 <= pool_size; m += 8) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    for (std::size_t p = 0; p < dims; ++p) {
      const __m256d q = _mm256_set1_pd(query[p]);
      const double* row = pool + p * stride + m;
      const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(row), q);
      const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(row + 4), q);
      acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(d0, d0));
      acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(d1, d1));
    }
    _mm256_storeu_pd(out + m, acc0);
    _mm256_storeu_pd(out + m + 4, acc1);
  }
  for (; m + 4 <= pool_size; m += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t p = 0; p < dims; ++p) {
      const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(pool + p * stride + m), _mm256_set1_pd(query[p]));
      acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
    }
    _mm256_storeu_pd(out + m, acc);
  }
  for (; m < pool_size; ++m) {
    double acc = 0.0;
    for (std::size_t p = 0; p < dims; ++p) {
      const double diff = pool[p * stride + m] - query[p];
      acc = acc + diff * diff;
    }
    out[m] = acc;
  }
}

}  // namespace optknn::simd
