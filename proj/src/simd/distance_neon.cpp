#include <arm_neon.h>

#include "optknn/simd/distance_kernels.hpp"

namespace optknn::simd {

// Two pool points per step. vmulq/vaddq rather than vfmaq keeps rounding
// identical to the scalar kernel.
void squared_distances_neon(std::span<const double> query, const double* pool,
                            std::size_t pool_size, std::size_t stride, double* out) {
  const std::size_t dims = query.size();
  std::size_t m = 0;
  for (; m + 2 <= pool_size; m += 2) {
    float64x2_t acc = vdupq_n_f64(0.0);
    for (std::size_t p = 0; p < dims; ++p) {
      const float64x2_t d = vsubq_f64(vld1q_f64(pool + p * stride + m), vdupq_n_f64(query[p]));
      acc = vaddq_f64(acc, vmulq_f64(d, d));
    }
    vst1q_f64(out + m, acc);
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
