// Blocked GEMM driver: operands are packed into contiguous panels (which
// also absorbs transposition and alpha) and handed to the active
// micro-kernel. Edge tiles go through a zero-padded scratch tile.

#include <algorithm>
#include <vector>

#include "kernel_table.hpp"
#include "lsmgan/simd/kernels.hpp"

namespace lsmgan::simd {
namespace {

constexpr std::size_t kBlockM = 96;
constexpr std::size_t kBlockK = 256;
constexpr std::size_t kBlockN = 2048;

template <class Real>
void pack_a(Trans trans, const Real* a, std::size_t lda, std::size_t row0, std::size_t rows,
            std::size_t col0, std::size_t depth, Real alpha, Real* out) {
  constexpr std::size_t mr = detail::TileShape<Real>::mr;
  for (std::size_t i0 = 0; i0 < rows; i0 += mr) {
    const std::size_t live = std::min(mr, rows - i0);
    for (std::size_t p = 0; p < depth; ++p) {
      for (std::size_t r = 0; r < mr; ++r) {
        Real v = 0;
        if (r < live) {
          const std::size_t i = row0 + i0 + r;
          const std::size_t kk = col0 + p;
          v = trans == Trans::No ? a[i * lda + kk] : a[kk * lda + i];
          v *= alpha;
        }
        *out++ = v;
      }
    }
  }
}

template <class Real>
void pack_b(Trans trans, const Real* b, std::size_t ldb, std::size_t row0, std::size_t depth,
            std::size_t col0, std::size_t cols, Real* out) {
  constexpr std::size_t nr = detail::TileShape<Real>::nr;
  for (std::size_t j0 = 0; j0 < cols; j0 += nr) {
    const std::size_t live = std::min(nr, cols - j0);
    for (std::size_t p = 0; p < depth; ++p) {
      const std::size_t kk = row0 + p;
      if (trans == Trans::No) {
        const Real* src = b + kk * ldb + col0 + j0;
        std::size_t c = 0;
        for (; c < live; ++c) out[c] = src[c];
        for (; c < nr; ++c) out[c] = 0;
      } else {
        std::size_t c = 0;
        for (; c < live; ++c) out[c] = b[(col0 + j0 + c) * ldb + kk];
        for (; c < nr; ++c) out[c] = 0;
      }
      out += nr;
    }
  }
}

}  // namespace

template <class Real>
void gemm_packed_b(Trans trans_a, std::size_t m, std::size_t n, std::size_t k, Real alpha,
                   const Real* a, std::size_t lda, const PackB<Real>& pack, Real beta, Real* c,
                   std::size_t ldc) {
  constexpr std::size_t mr = detail::TileShape<Real>::mr;
  constexpr std::size_t nr = detail::TileShape<Real>::nr;
  static_assert(nr == panel_width<Real>());
  if (m == 0 || n == 0) return;

  if (beta == Real(0)) {
    for (std::size_t i = 0; i < m; ++i) std::fill_n(c + i * ldc, n, Real(0));
  } else if (beta != Real(1)) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) c[i * ldc + j] *= beta;
  }
  if (k == 0 || alpha == Real(0)) return;

  const auto& table = detail::active_table<Real>();
  thread_local std::vector<Real> a_pack;
  thread_local std::vector<Real> b_pack;
  Real edge[mr * nr];

  for (std::size_t jc = 0; jc < n; jc += kBlockN) {
    const std::size_t nc = std::min(kBlockN, n - jc);
    const std::size_t nc_padded = (nc + nr - 1) / nr * nr;
    for (std::size_t pc = 0; pc < k; pc += kBlockK) {
      const std::size_t kc = std::min(kBlockK, k - pc);
      b_pack.resize(nc_padded * kc);
      pack(pc, kc, jc, nc, b_pack.data());
      for (std::size_t ic = 0; ic < m; ic += kBlockM) {
        const std::size_t mc = std::min(kBlockM, m - ic);
        const std::size_t mc_padded = (mc + mr - 1) / mr * mr;
        a_pack.resize(mc_padded * kc);
        pack_a(trans_a, a, lda, ic, mc, pc, kc, alpha, a_pack.data());
        for (std::size_t jr = 0; jr < nc; jr += nr) {
          const std::size_t live_n = std::min(nr, nc - jr);
          const Real* bp = b_pack.data() + jr * kc;
          for (std::size_t ir = 0; ir < mc; ir += mr) {
            const std::size_t live_m = std::min(mr, mc - ir);
            const Real* ap = a_pack.data() + ir * kc;
            Real* ct = c + (ic + ir) * ldc + jc + jr;
            if (live_m == mr && live_n == nr) {
              table.micro(kc, ap, bp, ct, ldc);
            } else {
              for (std::size_t r = 0; r < mr; ++r)
                for (std::size_t j = 0; j < nr; ++j)
                  edge[r * nr + j] = (r < live_m && j < live_n) ? ct[r * ldc + j] : Real(0);
              table.micro(kc, ap, bp, edge, nr);
              for (std::size_t r = 0; r < live_m; ++r)
                for (std::size_t j = 0; j < live_n; ++j) ct[r * ldc + j] = edge[r * nr + j];
            }
          }
        }
      }
    }
  }
}

template <class Real>
void gemm(Trans trans_a, Trans trans_b, std::size_t m, std::size_t n, std::size_t k, Real alpha,
          const Real* a, std::size_t lda, const Real* b, std::size_t ldb, Real beta, Real* c,
          std::size_t ldc) {
  const PackB<Real> pack = [&](std::size_t k0, std::size_t depth, std::size_t n0, std::size_t cols,
                               Real* out) { pack_b(trans_b, b, ldb, k0, depth, n0, cols, out); };
  gemm_packed_b(trans_a, m, n, k, alpha, a, lda, pack, beta, c, ldc);
}

template void gemm<float>(Trans, Trans, std::size_t, std::size_t, std::size_t, float, const float*,
                          std::size_t, const float*, std::size_t, float, float*, std::size_t);
template void gemm<double>(Trans, Trans, std::size_t, std::size_t, std::size_t, double,
                           const double*, std::size_t, const double*, std::size_t, double, double*,
                           std::size_t);
template void gemm_packed_b<float>(Trans, std::size_t, std::size_t, std::size_t, float,
                                   const float*, std::size_t, const PackB<float>&, float, float*,
                                   std::size_t);
template void gemm_packed_b<double>(Trans, std::size_t, std::size_t, std::size_t, double,
                                    const double*, std::size_t, const PackB<double>&, double,
                                    double*, std::size_t);

}  // namespace lsmgan::simd
