#include <atomic>

#include "kernel_table.hpp"
#include "lsmgan/error.hpp"
#include "lsmgan/simd/kernels.hpp"

namespace lsmgan::simd {
namespace {

bool detect_avx2() {
#if defined(LSMGAN_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

std::atomic<Backend>& backend_slot() {
  static std::atomic<Backend> slot{detect_avx2() ? Backend::Avx2 : Backend::Scalar};
  return slot;
}

}  // namespace

std::string_view to_string(Backend backend) {
  return backend == Backend::Avx2 ? "avx2" : "scalar";
}

bool avx2_available() {
  static const bool available = detect_avx2();
  return available;
}

Backend active_backend() { return backend_slot().load(std::memory_order_relaxed); }

void set_backend(Backend backend) {
  if (backend == Backend::Avx2 && !avx2_available())
    throw Error(ErrorCode::InvalidConfig, "AVX2 backend requested but not available");
  backend_slot().store(backend, std::memory_order_relaxed);
}

namespace detail {

template <>
const KernelTable<float>& active_table<float>() {
#if defined(LSMGAN_HAVE_AVX2_TU)
  if (active_backend() == Backend::Avx2) return avx2_table_f32();
#endif
  return scalar_table_f32();
}

template <>
const KernelTable<double>& active_table<double>() {
#if defined(LSMGAN_HAVE_AVX2_TU)
  if (active_backend() == Backend::Avx2) return avx2_table_f64();
#endif
  return scalar_table_f64();
}

}  // namespace detail

template <class Real>
Real dot(const Real* a, const Real* b, std::size_t n) {
  return detail::active_table<Real>().dot(a, b, n);
}

template <class Real>
void axpy(Real alpha, const Real* x, Real* y, std::size_t n) {
  detail::active_table<Real>().axpy(alpha, x, y, n);
}

template float dot<float>(const float*, const float*, std::size_t);
template double dot<double>(const double*, const double*, std::size_t);
template void axpy<float>(float, const float*, float*, std::size_t);
template void axpy<double>(double, const double*, double*, std::size_t);

}  // namespace lsmgan::simd
