#pragma once

// Data-parallel inner loops used by the spectral code and the
// differentiation engine. Each kernel has a portable scalar reference
// implementation and an AVX2/FMA variant; the variant is chosen once at
// start-up from CPUID and can be overridden (tests compare both).

#include <cstddef>
#include <functional>
#include <string_view>

namespace lsmgan::simd {

enum class Backend { Scalar, Avx2 };

std::string_view to_string(Backend backend);

/// True when the AVX2 variant was compiled in and the CPU supports AVX2+FMA.
bool avx2_available();

Backend active_backend();

/// Throws lsmgan::Error(InvalidConfig) when the backend is not available.
void set_backend(Backend backend);

class ScopedBackend {
 public:
  explicit ScopedBackend(Backend backend) : previous_(active_backend()) { set_backend(backend); }
  ~ScopedBackend() { set_backend(previous_); }
  ScopedBackend(const ScopedBackend&) = delete;
  ScopedBackend& operator=(const ScopedBackend&) = delete;

 private:
  Backend previous_;
};

enum class Trans { No, Yes };

template <class Real>
Real dot(const Real* a, const Real* b, std::size_t n);

/// y += alpha * x
template <class Real>
void axpy(Real alpha, const Real* x, Real* y, std::size_t n);

/// Row-major C = alpha * op(A) * op(B) + beta * C, with op(A) m-by-k and
/// op(B) k-by-n. lda/ldb/ldc are row strides of the stored matrices.
/// beta == 0 overwrites C without reading it.
template <class Real>
void gemm(Trans trans_a, Trans trans_b, std::size_t m, std::size_t n, std::size_t k, Real alpha,
          const Real* a, std::size_t lda, const Real* b, std::size_t ldb, Real beta, Real* c,
          std::size_t ldc);

/// Column count of one packed B panel.
template <class Real>
constexpr std::size_t panel_width() {
  return sizeof(Real) == 4 ? 16 : 8;
}

/// Writes the k0..k0+depth rows and n0..n0+cols columns of op(B) as
/// consecutive panels: for each group of panel_width() columns, depth rows
/// of panel_width() values, dead columns zero-filled.
template <class Real>
using PackB = std::function<void(std::size_t k0, std::size_t depth, std::size_t n0,
                                 std::size_t cols, Real* out)>;

/// gemm with op(B) supplied by a packing callback instead of a stored
/// matrix; lets callers build B on the fly (implicit im2col).
template <class Real>
void gemm_packed_b(Trans trans_a, std::size_t m, std::size_t n, std::size_t k, Real alpha,
                   const Real* a, std::size_t lda, const PackB<Real>& pack_b, Real beta, Real* c,
                   std::size_t ldc);

}  // namespace lsmgan::simd
