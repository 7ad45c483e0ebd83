#include "optknn/simd/distance_kernels.hpp"

namespace optknn::simd {

void squared_distances_scalar(std::span<const double> query, const double* pool,
                              std::size_t pool_size, std::size_t stride, double* out) {
  const std::size_t dims = query.size();
  for (std::size_t m = 0; m < pool_size; ++m) {
    double acc = 0.0;
    for (std::size_t p = 0; p < dims; ++p) {
      const double diff = pool[p * stride + m] - query[p];
      acc = acc + diff * diff;
    }
    out[m] = acc;
  }
}

}  // namespace optknn::simd
