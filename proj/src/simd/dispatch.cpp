#include <cstdlib>
#include <string_view>

#include "optknn/simd/distance_kernels.hpp"

namespace optknn::simd {

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "scalar";
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(OPTKNN_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(OPTKNN_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

namespace {

Isa resolve_isa() {
  if (const char* env = std::getenv("OPTKNN_SIMD")) {
    const std::string_view want(env);
    for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
      if (want == to_string(isa) && isa_available(isa)) return isa;
    }
  }
  if (isa_available(Isa::Avx2)) return Isa::Avx2;
  if (isa_available(Isa::Neon)) return Isa::Neon;
  return Isa::Scalar;
}

}  // namespace

Isa active_isa() {
  static const Isa isa = resolve_isa();
  return isa;
}

SquaredDistanceKernel kernel_for(Isa isa) {
  switch (isa) {
#if defined(OPTKNN_HAVE_AVX2)
    case Isa::Avx2:
      if (isa_available(Isa::Avx2)) return &squared_distances_avx2;
      break;
#endif
#if defined(OPTKNN_HAVE_NEON)
    case Isa::Neon:
      return &squared_distances_neon;
#endif
    default:
      break;
  }
  return &squared_distances_scalar;
}

void squared_distances(std::span<const double> query, const double* pool, std::size_t pool_size,
                       std::size_t stride, double* out) {
  static const SquaredDistanceKernel kernel = kernel_for(active_isa());
  kernel(query, pool, pool_size, stride, out);
}

}  // namespace optknn::simd
