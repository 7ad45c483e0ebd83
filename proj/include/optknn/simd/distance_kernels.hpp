#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Squared Euclidean distance from one query point to a block of pool points.
//
// The pool is stored dimension-major: coordinate p of pool point m lives at
// pool[p * stride + m]. Every kernel accumulates dimensions in ascending
// order with a separate multiply and add, so all variants produce
// bit-identical output for the same input.
namespace optknn::simd {

enum class Isa { Scalar, Avx2, Neon };

std::string_view to_string(Isa isa);

using SquaredDistanceKernel = void (*)(std::span<const double> query, const double* pool,
                                       std::size_t pool_size, std::size_t stride, double* out);

void squared_distances_scalar(std::span<const double> query, const double* pool,
                              std::size_t pool_size, std::size_t stride, double* out);
#if defined(OPTKNN_HAVE_AVX2)
void squared_distances_avx2(std::span<const double> query, const double* pool,
                            std::size_t pool_size, std::size_t stride, double* out);
#endif
#if defined(OPTKNN_HAVE_NEON)
void squared_distances_neon(std::span<const double> query, const double* pool,
                            std::size_t pool_size, std::size_t stride, double* out);
#endif

// True when the kernel for `isa` is compiled in and the running CPU supports it.
bool isa_available(Isa isa);

// Best available ISA, unless OPTKNN_SIMD=scalar|avx2|neon names another
// available one. Resolved once per process.
Isa active_isa();

SquaredDistanceKernel kernel_for(Isa isa);

// Dispatches through active_isa().
void squared_distances(std::span<const double> query, const double* pool, std::size_t pool_size,
                       std::size_t stride, double* out);

}  // namespace optknn::simd
