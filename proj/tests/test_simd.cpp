#include <doctest.h>

#include <cmath>
#include <vector>

#include "lsmgan/ad/ops.hpp"
#include "lsmgan/rng.hpp"
#include "lsmgan/simd/kernels.hpp"

using namespace lsmgan;
using namespace lsmgan::simd;

namespace {

template <class Real>
std::vector<Real> random_values(Rng& rng, std::size_t n) {
  std::vector<Real> v(n);
  for (auto& x : v) x = static_cast<Real>(rng.uniform(-1.0, 1.0));
  return v;
}

// Plain triple loop in double.
template <class Real>
std::vector<double> naive_gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
                               const std::vector<Real>& a, const std::vector<Real>& b) {
  std::vector<double> c(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = ta == Trans::No ? a[i * k + p] : a[p * m + i];
        const double bv = tb == Trans::No ? b[p * n + j] : b[j * k + p];
        acc += av * bv;
      }
      c[i * n + j] = acc;
    }
  return c;
}

template <class Real>
double tolerance() {
  return sizeof(Real) == 4 ? 2e-5 : 1e-12;
}

template <class Real>
void check_gemm_shapes() {
  Rng rng(17);
  const std::vector<std::size_t> dims{1, 5, 7, 16, 33, 100};
  for (auto ta : {Trans::No, Trans::Yes})
    for (auto tb : {Trans::No, Trans::Yes})
      for (std::size_t m : dims)
        for (std::size_t n : {std::size_t(1), std::size_t(9), std::size_t(40), std::size_t(300)})
          for (std::size_t k : {std::size_t(1), std::size_t(13), std::size_t(260)}) {
            const auto a = random_values<Real>(rng, m * k);
            const auto b = random_values<Real>(rng, k * n);
            const auto c0 = random_values<Real>(rng, m * n);
            const auto want = naive_gemm(ta, tb, m, n, k, a, b);
            const std::size_t lda = ta == Trans::No ? k : m;
            const std::size_t ldb = tb == Trans::No ? n : k;
            std::vector<std::vector<Real>> results;
            for (auto backend : {Backend::Scalar, Backend::Avx2}) {
              if (backend == Backend::Avx2 && !avx2_available()) continue;
              ScopedBackend scope(backend);
              auto c = c0;
              gemm<Real>(ta, tb, m, n, k, Real(1), a.data(), lda, b.data(), ldb, Real(0.5), c.data(), n);
              for (std::size_t i = 0; i < c.size(); ++i) {
                const double expect = want[i] + 0.5 * c0[i];
                REQUIRE(std::abs(c[i] - expect) <= tolerance<Real>() * (1.0 + std::sqrt(double(k))));
              }
              results.push_back(std::move(c));
            }
            if (results.size() == 2)
              for (std::size_t i = 0; i < results[0].size(); ++i)
                REQUIRE(std::abs(double(results[0][i]) - double(results[1][i])) <=
                        tolerance<Real>() * (1.0 + std::sqrt(double(k))));
          }
}

}  // namespace

TEST_CASE("AVX2 is detected on this build host when compiled in") {
  MESSAGE("active backend: " << to_string(active_backend()));
  if (avx2_available()) CHECK(active_backend() == Backend::Avx2);
  else CHECK(active_backend() == Backend::Scalar);
}

TEST_CASE_TEMPLATE("dot and axpy agree across backends", Real, float, double) {
  Rng rng(2);
  for (std::size_t n : {0, 1, 3, 7, 8, 15, 16, 17, 31, 64, 1000, 1201}) {
    const auto a = random_values<Real>(rng, n);
    const auto b = random_values<Real>(rng, n);
    double want = 0;
    for (std::size_t i = 0; i < n; ++i) want += double(a[i]) * double(b[i]);
    for (auto backend : {Backend::Scalar, Backend::Avx2}) {
      if (backend == Backend::Avx2 && !avx2_available()) continue;
      ScopedBackend scope(backend);
      CHECK(std::abs(dot(a.data(), b.data(), n) - want) <= tolerance<Real>() * (1.0 + std::sqrt(double(n))));
      auto y = b;
      axpy(Real(0.75), a.data(), y.data(), n);
      for (std::size_t i = 0; i < n; ++i)
        CHECK(std::abs(double(y[i]) - (double(b[i]) + 0.75 * double(a[i]))) <= tolerance<Real>());
    }
  }
}

TEST_CASE_TEMPLATE("gemm matches the naive product on both backends", Real, float, double) {
  check_gemm_shapes<Real>();
}

TEST_CASE_TEMPLATE("gemm_packed_b with a callback equals gemm", Real, float, double) {
  Rng rng(8);
  const std::size_t m = 13, n = 77, k = 29;
  const auto a = random_values<Real>(rng, m * k);
  const auto b = random_values<Real>(rng, k * n);
  std::vector<Real> want(m * n, Real(0));
  gemm<Real>(Trans::No, Trans::No, m, n, k, Real(1), a.data(), k, b.data(), n, Real(0), want.data(), n);
  // Packs op(B) into panel_width-column strips, zero-padded at the edge.
  PackB<Real> pack = [&](std::size_t k0, std::size_t depth, std::size_t n0, std::size_t cols, Real* out) {
    constexpr std::size_t nr = panel_width<Real>();
    for (std::size_t j0 = 0; j0 < cols; j0 += nr)
      for (std::size_t p = 0; p < depth; ++p)
        for (std::size_t j = 0; j < nr; ++j)
          *out++ = j0 + j < cols ? b[(k0 + p) * n + n0 + j0 + j] : Real(0);
  };
  for (auto backend : {Backend::Scalar, Backend::Avx2}) {
    if (backend == Backend::Avx2 && !avx2_available()) continue;
    ScopedBackend scope(backend);
    std::vector<Real> c(m * n, Real(0));
    gemm_packed_b<Real>(Trans::No, m, n, k, Real(1), a.data(), k, pack, Real(0), c.data(), n);
    for (std::size_t i = 0; i < c.size(); ++i)
      CHECK(std::abs(double(c[i]) - double(want[i])) <= tolerance<Real>() * 10);
  }
}

TEST_CASE("conv1d forward and backward agree across backends") {
  if (!avx2_available()) return;
  Rng rng(30);
  const std::size_t batch = 3, cin = 4, cout = 6, len = 57, kernel = 7;
  const auto xv = random_values<float>(rng, batch * cin * len);
  const auto wv = random_values<float>(rng, cout * cin * kernel);
  const auto bv = random_values<float>(rng, cout);
  for (ad::ConvSpec spec : {ad::ConvSpec{1, 3, 0}, ad::ConvSpec{2, 1, 0}}) {
    std::vector<std::vector<float>> outs, grads_x, grads_w;
    for (auto backend : {Backend::Scalar, Backend::Avx2}) {
      ScopedBackend scope(backend);
      auto x = ad::parameter<float>({batch, cin, len}, xv, "x");
      auto w = ad::parameter<float>({cout, cin, kernel}, wv, "w");
      auto b = ad::parameter<float>({cout}, bv, "b");
      auto y = ad::conv1d(x, w, b, spec);
      auto loss = ad::sum(ad::square(y));
      ad::backward(loss);
      outs.push_back(y->value);
      grads_x.push_back(x->grad);
      grads_w.push_back(w->grad);
    }
    for (std::size_t i = 0; i < outs[0].size(); ++i) CHECK(outs[0][i] == doctest::Approx(outs[1][i]).epsilon(1e-5));
    for (std::size_t i = 0; i < grads_x[0].size(); ++i)
      CHECK(grads_x[0][i] == doctest::Approx(grads_x[1][i]).epsilon(1e-4));
    for (std::size_t i = 0; i < grads_w[0].size(); ++i)
      CHECK(grads_w[0][i] == doctest::Approx(grads_w[1][i]).epsilon(1e-4));
  }
}
