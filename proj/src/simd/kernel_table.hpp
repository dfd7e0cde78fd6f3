#pragma once

#include <cstddef>

namespace lsmgan::simd::detail {

template <class Real>
struct TileShape;
template <>
struct TileShape<float> {
  static constexpr std::size_t mr = 6;
  static constexpr std::size_t nr = 16;
};
template <>
struct TileShape<double> {
  static constexpr std::size_t mr = 6;
  static constexpr std::size_t nr = 8;
};

// Micro-kernel contract: C[mr x nr] (row stride ldc) += sum_k a[k*mr + r] * b[k*nr + c]
// over packed panels of depth kc.
template <class Real>
struct KernelTable {
  Real (*dot)(const Real*, const Real*, std::size_t);
  void (*axpy)(Real, const Real*, Real*, std::size_t);
  void (*micro)(std::size_t kc, const Real* a, const Real* b, Real* c, std::size_t ldc);
};

const KernelTable<float>& scalar_table_f32();
const KernelTable<double>& scalar_table_f64();
#if defined(LSMGAN_HAVE_AVX2_TU)
const KernelTable<float>& avx2_table_f32();
const KernelTable<double>& avx2_table_f64();
#endif

template <class Real>
const KernelTable<Real>& active_table();

}  // namespace lsmgan::simd::detail
