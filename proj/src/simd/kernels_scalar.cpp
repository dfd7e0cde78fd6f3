#include "kernel_table.hpp"

namespace lsmgan::simd::detail {
namespace {

template <class Real>
Real dot_scalar(const Real* a, const Real* b, std::size_t n) {
  Real acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <class Real>
void axpy_scalar(Real alpha, const Real* x, Real* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <class Real>
void micro_scalar(std::size_t kc, const Real* a, const Real* b, Real* c, std::size_t ldc) {
  constexpr std::size_t mr = TileShape<Real>::mr;
  constexpr std::size_t nr = TileShape<Real>::nr;
  Real acc[mr][nr];
  for (std::size_t r = 0; r < mr; ++r)
    for (std::size_t j = 0; j < nr; ++j) acc[r][j] = c[r * ldc + j];
  for (std::size_t p = 0; p < kc; ++p) {
    const Real* ap = a + p * mr;
    const Real* bp = b + p * nr;
    for (std::size_t r = 0; r < mr; ++r)
      for (std::size_t j = 0; j < nr; ++j) acc[r][j] += ap[r] * bp[j];
  }
  for (std::size_t r = 0; r < mr; ++r)
    for (std::size_t j = 0; j < nr; ++j) c[r * ldc + j] = acc[r][j];
}

}  // namespace

const KernelTable<float>& scalar_table_f32() {
  static const KernelTable<float> table{&dot_scalar<float>, &axpy_scalar<float>,
                                        &micro_scalar<float>};
  return table;
}

const KernelTable<double>& scalar_table_f64() {
  static const KernelTable<double> table{&dot_scalar<double>, &axpy_scalar<double>,
                                         &micro_scalar<double>};
  return table;
}

}  // namespace lsmgan::simd::detail
