#include "lsmgan/ad/ops.hpp"

#include <algorithm>
#include <cmath>

#include "lsmgan/error.hpp"
#include "lsmgan/simd/kernels.hpp"

namespace lsmgan::ad {

using simd::Trans;

std::size_t conv1d_output_length(std::size_t length, std::size_t kernel, const ConvSpec& spec) {
  if (spec.stride == 0 || kernel == 0 || kernel > length + 2 * spec.padding)
    throw Error(ErrorCode::ShapeMismatch, "conv1d: kernel longer than padded input");
  return (length + 2 * spec.padding - kernel) / spec.stride + 1;
}

std::size_t transposed_conv1d_output_length(std::size_t length, std::size_t kernel,
                                            const ConvSpec& spec) {
  const std::size_t full = (length - 1) * spec.stride + kernel + spec.output_padding;
  if (spec.stride == 0 || length == 0 || full <= 2 * spec.padding)
    throw Error(ErrorCode::ShapeMismatch, "transposed_conv1d: empty output");
  return full - 2 * spec.padding;
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::ShapeMismatch, what);
}

template <class Real>
void require_same(const Var<Real>& a, const Var<Real>& b, const char* op) {
  require(a->shape == b->shape, std::string(op) + ": shapes " + shape_string(a->shape) + " and " +
                                    shape_string(b->shape) + " differ");
}

// Output columns l with 0 <= l*stride + off < src_len form one contiguous range.
struct ValidRange {
  std::size_t lo = 0;
  std::size_t hi = 0;  // exclusive
};

inline ValidRange valid_columns(std::ptrdiff_t off, std::size_t stride, std::size_t src_len,
                                std::size_t ncols) {
  const auto s = static_cast<std::ptrdiff_t>(stride);
  const std::ptrdiff_t lo = off >= 0 ? 0 : (-off + s - 1) / s;
  const std::ptrdiff_t last = static_cast<std::ptrdiff_t>(src_len) - 1 - off;
  if (last < 0) return {0, 0};
  const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(ncols), last / s + 1);
  if (hi <= lo) return {0, 0};
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

// col[(c*K + t) * ncols + l] = src[c * src_len + l*stride + t - pad], 0 outside.
template <class Real>
void im2col(const Real* src, std::size_t channels, std::size_t src_len, std::size_t kernel,
            std::size_t stride, std::size_t pad, std::size_t ncols, Real* col) {
  for (std::size_t c = 0; c < channels; ++c) {
    const Real* s = src + c * src_len;
    for (std::size_t t = 0; t < kernel; ++t) {
      Real* row = col + (c * kernel + t) * ncols;
      const auto off = static_cast<std::ptrdiff_t>(t) - static_cast<std::ptrdiff_t>(pad);
      const ValidRange r = valid_columns(off, stride, src_len, ncols);
      std::fill(row, row + r.lo, Real(0));
      const Real* base = s + off;
      if (stride == 1) {
        std::copy(base + r.lo, base + r.hi, row + r.lo);
      } else {
        for (std::size_t l = r.lo; l < r.hi; ++l) row[l] = base[l * stride];
      }
      std::fill(row + std::max(r.lo, r.hi), row + ncols, Real(0));
    }
  }
}

// Adjoint of im2col: dst[c * dst_len + l*stride + t - pad] += col[...].
template <class Real>
void col2im(const Real* col, std::size_t channels, std::size_t dst_len, std::size_t kernel,
            std::size_t stride, std::size_t pad, std::size_t ncols, Real* dst) {
  for (std::size_t c = 0; c < channels; ++c) {
    Real* d = dst + c * dst_len;
    for (std::size_t t = 0; t < kernel; ++t) {
      const Real* row = col + (c * kernel + t) * ncols;
      const auto off = static_cast<std::ptrdiff_t>(t) - static_cast<std::ptrdiff_t>(pad);
      const ValidRange r = valid_columns(off, stride, dst_len, ncols);
      Real* base = d + off;
      if (stride == 1) {
        for (std::size_t l = r.lo; l < r.hi; ++l) base[l] += row[l];
      } else {
        for (std::size_t l = r.lo; l < r.hi; ++l) base[l * stride] += row[l];
      }
    }
  }
}

// Implicit column matrix over a batch: row (c, t), column (b, l) holds
// src[(b*channels + c)*src_len + l*stride + t - pad], zero outside the signal.
template <class Real>
struct ColumnView {
  const Real* src = nullptr;
  std::size_t channels = 0;
  std::size_t src_len = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;
  std::ptrdiff_t pad = 0;
  std::size_t ncols = 0;  // output columns per batch item

  std::size_t rows() const { return channels * kernel; }
};

// Packs op(B) = view into gemm panels (k = (c, t), n = (b, l)).
template <class Real>
simd::PackB<Real> pack_columns(const ColumnView<Real>& v) {
  return [v](std::size_t k0, std::size_t depth, std::size_t n0, std::size_t cols, Real* out) {
    constexpr std::size_t nr = simd::panel_width<Real>();
    const auto len = static_cast<std::ptrdiff_t>(v.src_len);
    std::ptrdiff_t lpos[nr];
    const Real* base[nr];
    for (std::size_t j0 = 0; j0 < cols; j0 += nr) {
      const std::size_t live = std::min(nr, cols - j0);
      const std::size_t first = n0 + j0;
      const std::size_t b_first = first / v.ncols;
      const bool one_item = (first + live - 1) / v.ncols == b_first;
      for (std::size_t cc = 0; cc < live; ++cc) {
        const std::size_t col = first + cc;
        const std::size_t b = col / v.ncols, l = col % v.ncols;
        lpos[cc] = static_cast<std::ptrdiff_t>(l * v.stride) - v.pad;
        base[cc] = v.src + b * v.channels * v.src_len;
      }
      std::size_t c = k0 / v.kernel, t = k0 % v.kernel;
      for (std::size_t p = 0; p < depth; ++p) {
        const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(c * v.src_len);
        const auto tt = static_cast<std::ptrdiff_t>(t);
        const std::ptrdiff_t pos0 = lpos[0] + tt;
        if (one_item && v.stride == 1 && live == nr && pos0 >= 0 &&
            pos0 + static_cast<std::ptrdiff_t>(nr) <= len) {
          const Real* s = base[0] + off + pos0;
          for (std::size_t cc = 0; cc < nr; ++cc) out[cc] = s[cc];
        } else {
          for (std::size_t cc = 0; cc < live; ++cc) {
            const std::ptrdiff_t pos = lpos[cc] + tt;
            out[cc] = (pos >= 0 && pos < len) ? base[cc][off + pos] : Real(0);
          }
          for (std::size_t cc = live; cc < nr; ++cc) out[cc] = Real(0);
        }
        out += nr;
        if (++t == v.kernel) {
          t = 0;
          ++c;
        }
      }
    }
  };
}

// Packs op(B) = transpose(view) (k = (b, l), n = (c, t)).
template <class Real>
simd::PackB<Real> pack_columns_transposed(const ColumnView<Real>& v) {
  return [v](std::size_t k0, std::size_t depth, std::size_t n0, std::size_t cols, Real* out) {
    constexpr std::size_t nr = simd::panel_width<Real>();
    const auto len = static_cast<std::ptrdiff_t>(v.src_len);
    std::ptrdiff_t coff[nr];
    std::ptrdiff_t tap[nr];
    for (std::size_t j0 = 0; j0 < cols; j0 += nr) {
      const std::size_t live = std::min(nr, cols - j0);
      for (std::size_t cc = 0; cc < live; ++cc) {
        const std::size_t row = n0 + j0 + cc;
        coff[cc] = static_cast<std::ptrdiff_t>((row / v.kernel) * v.src_len);
        tap[cc] = static_cast<std::ptrdiff_t>(row % v.kernel);
      }
      std::size_t b = k0 / v.ncols, l = k0 % v.ncols;
      for (std::size_t cc = live; cc < nr; ++cc) coff[cc] = tap[cc] = 0;
      const auto last_tap = static_cast<std::ptrdiff_t>(v.kernel) - 1;
      for (std::size_t p = 0; p < depth; ++p) {
        const Real* base = v.src + b * v.channels * v.src_len;
        const std::ptrdiff_t lp = static_cast<std::ptrdiff_t>(l * v.stride) - v.pad;
        if (live == nr && lp >= 0 && lp + last_tap < len) {
          const Real* s = base + lp;
          for (std::size_t cc = 0; cc < nr; ++cc) out[cc] = s[coff[cc] + tap[cc]];
        } else {
          for (std::size_t cc = 0; cc < live; ++cc) {
            const std::ptrdiff_t pos = lp + tap[cc];
            out[cc] = (pos >= 0 && pos < len) ? base[coff[cc] + pos] : Real(0);
          }
          for (std::size_t cc = live; cc < nr; ++cc) out[cc] = Real(0);
        }
        out += nr;
        if (++l == v.ncols) {
          l = 0;
          ++b;
        }
      }
    }
  };
}

// [B, C, L] <-> [C, B*L]
template <class Real>
void to_channel_major(const Real* src, std::size_t batch, std::size_t channels, std::size_t len,
                      Real* dst) {
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t c = 0; c < channels; ++c)
      std::copy_n(src + (b * channels + c) * len, len, dst + (c * batch + b) * len);
}

template <class Real, class Fwd, class Deriv>
Var<Real> unary(const Var<Real>& x, const char* name, Fwd fwd, Deriv deriv) {
  std::vector<Real> y(x->size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = fwd(x->value[i]);
  auto out = make_node<Real>(name, x->shape, std::move(y), {x});
  out->backward_rule = [deriv](Node<Real>& self) {
    auto& in = *self.parents[0];
    if (!in.requires_grad) return;
    Real* g = in.grad_data();
    for (std::size_t i = 0; i < self.size(); ++i)
      g[i] += self.grad[i] * deriv(in.value[i], self.value[i]);
  };
  return out;
}

template <class Real>
Shape drop_last(const Shape& s) {
  require(!s.empty(), "reduction over the last axis of a scalar");
  return Shape(s.begin(), s.end() - 1);
}

}  // namespace

template <class Real>
Var<Real> add(const Var<Real>& a, const Var<Real>& b) {
  require_same(a, b, "add");
  std::vector<Real> y(a->size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a->value[i] + b->value[i];
  auto out = make_node<Real>("add", a->shape, std::move(y), {a, b});
  out->backward_rule = [](Node<Real>& self) {
    for (auto& p : self.parents) {
      if (!p->requires_grad) continue;
      Real* g = p->grad_data();
      for (std::size_t i = 0; i < self.size(); ++i) g[i] += self.grad[i];
    }
  };
  return out;
}

template <class Real>
Var<Real> sub(const Var<Real>& a, const Var<Real>& b) {
  require_same(a, b, "sub");
  std::vector<Real> y(a->size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a->value[i] - b->value[i];
  auto out = make_node<Real>("sub", a->shape, std::move(y), {a, b});
  out->backward_rule = [](Node<Real>& self) {
    if (self.parents[0]->requires_grad) {
      Real* g = self.parents[0]->grad_data();
      for (std::size_t i = 0; i < self.size(); ++i) g[i] += self.grad[i];
    }
    if (self.parents[1]->requires_grad) {
      Real* g = self.parents[1]->grad_data();
      for (std::size_t i = 0; i < self.size(); ++i) g[i] -= self.grad[i];
    }
  };
  return out;
}

template <class Real>
Var<Real> mul(const Var<Real>& a, const Var<Real>& b) {
  require_same(a, b, "mul");
  std::vector<Real> y(a->size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a->value[i] * b->value[i];
  auto out = make_node<Real>("mul", a->shape, std::move(y), {a, b});
  out->backward_rule = [](Node<Real>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) {
      Real* g = pa.grad_data();
      for (std::size_t i = 0; i < self.size(); ++i) g[i] += self.grad[i] * pb.value[i];
    }
    if (pb.requires_grad) {
      Real* g = pb.grad_data();
      for (std::size_t i = 0; i < self.size(); ++i) g[i] += self.grad[i] * pa.value[i];
    }
  };
  return out;
}

template <class Real>
Var<Real> scale(const Var<Real>& a, Real factor) {
  return affine(a, factor, Real(0));
}

template <class Real>
Var<Real> affine(const Var<Real>& a, Real factor, Real shift) {
  return unary<Real>(
      a, "affine", [=](Real v) { return factor * v + shift; },
      [=](Real, Real) { return factor; });
}

template <class Real>
Var<Real> matmul(const Var<Real>& a, const Var<Real>& b) {
  require(a->shape.size() == 2 && b->shape.size() == 2 && a->shape[1] == b->shape[0],
          "matmul: incompatible shapes " + shape_string(a->shape) + " x " + shape_string(b->shape));
  const std::size_t m = a->shape[0], k = a->shape[1], n = b->shape[1];
  std::vector<Real> y(m * n);
  simd::gemm<Real>(Trans::No, Trans::No, m, n, k, 1, a->value.data(), k, b->value.data(), n, 0,
                   y.data(), n);
  auto out = make_node<Real>("matmul", {m, n}, std::move(y), {a, b});
  out->backward_rule = [m, n, k](Node<Real>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad)
      simd::gemm<Real>(Trans::No, Trans::Yes, m, k, n, 1, self.grad.data(), n, pb.value.data(), n,
                       1, pa.grad_data(), k);
    if (pb.requires_grad)
      simd::gemm<Real>(Trans::Yes, Trans::No, k, n, m, 1, pa.value.data(), k, self.grad.data(), n,
                       1, pb.grad_data(), n);
  };
  return out;
}

template <class Real>
Var<Real> dense(const Var<Real>& x, const Var<Real>& weight, const Var<Real>& bias) {
  require(x->shape.size() == 2 && weight->shape.size() == 2 && weight->shape[1] == x->shape[1],
          "dense: input " + shape_string(x->shape) + " vs weight " + shape_string(weight->shape));
  const std::size_t batch = x->shape[0], in = x->shape[1], outn = weight->shape[0];
  require(!bias || bias->shape == Shape{outn}, "dense: bias shape");
  std::vector<Real> y(batch * outn);
  if (bias)
    for (std::size_t b = 0; b < batch; ++b)
      std::copy(bias->value.begin(), bias->value.end(), y.begin() + static_cast<std::ptrdiff_t>(b * outn));
  simd::gemm<Real>(Trans::No, Trans::Yes, batch, outn, in, 1, x->value.data(), in,
                   weight->value.data(), in, bias ? 1 : 0, y.data(), outn);
  std::vector<Var<Real>> parents{x, weight};
  if (bias) parents.push_back(bias);
  auto out = make_node<Real>("dense", {batch, outn}, std::move(y), std::move(parents));
  out->backward_rule = [batch, in, outn](Node<Real>& self) {
    auto& px = *self.parents[0];
    auto& pw = *self.parents[1];
    const Real* gy = self.grad.data();
    if (px.requires_grad)
      simd::gemm<Real>(Trans::No, Trans::No, batch, in, outn, 1, gy, outn, pw.value.data(), in, 1,
                       px.grad_data(), in);
    if (pw.requires_grad)
      simd::gemm<Real>(Trans::Yes, Trans::No, outn, in, batch, 1, gy, outn, px.value.data(), in, 1,
                       pw.grad_data(), in);
    if (self.parents.size() > 2 && self.parents[2]->requires_grad) {
      Real* gb = self.parents[2]->grad_data();
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t o = 0; o < outn; ++o) gb[o] += gy[b * outn + o];
    }
  };
  return out;
}

template <class Real>
Var<Real> conv1d(const Var<Real>& x, const Var<Real>& weight, const Var<Real>& bias,
                 const ConvSpec& spec) {
  require(x->shape.size() == 3 && weight->shape.size() == 3 && weight->shape[1] == x->shape[1],
          "conv1d: input " + shape_string(x->shape) + " vs weight " + shape_string(weight->shape));
  const std::size_t batch = x->shape[0], cin = x->shape[1], len = x->shape[2];
  const std::size_t cout = weight->shape[0], kernel = weight->shape[2];
  require(!bias || bias->shape == Shape{cout}, "conv1d: bias shape");
  const std::size_t lout = conv1d_output_length(len, kernel, spec);
  const std::size_t rows = cin * kernel;
  const std::size_t wide = batch * lout;

  // One gemm over the whole batch: [cout, rows] x [rows, B*lout].
  ColumnView<Real> xv{x->value.data(), cin, len, kernel, spec.stride,
                      static_cast<std::ptrdiff_t>(spec.padding), lout};
  std::vector<Real> yt(cout * wide);
  simd::gemm_packed_b<Real>(Trans::No, cout, wide, rows, 1, weight->value.data(), rows,
                            pack_columns(xv), 0, yt.data(), wide);
  std::vector<Real> y(batch * cout * lout);
  for (std::size_t o = 0; o < cout; ++o) {
    const Real shift = bias ? bias->value[o] : Real(0);
    for (std::size_t b = 0; b < batch; ++b) {
      const Real* src = yt.data() + o * wide + b * lout;
      Real* dst = y.data() + (b * cout + o) * lout;
      for (std::size_t l = 0; l < lout; ++l) dst[l] = src[l] + shift;
    }
  }

  std::vector<Var<Real>> parents{x, weight};
  if (bias) parents.push_back(bias);
  auto out = make_node<Real>("conv1d", {batch, cout, lout}, std::move(y), std::move(parents));
  out->backward_rule = [=](Node<Real>& self) {
    auto& px = *self.parents[0];
    auto& pw = *self.parents[1];
    std::vector<Real> gt(cout * wide);
    to_channel_major(self.grad.data(), batch, cout, lout, gt.data());
    if (self.parents.size() > 2 && self.parents[2]->requires_grad) {
      Real* gb = self.parents[2]->grad_data();
      for (std::size_t o = 0; o < cout; ++o) {
        Real acc = 0;
        for (std::size_t i = 0; i < wide; ++i) acc += gt[o * wide + i];
        gb[o] += acc;
      }
    }
    if (pw.requires_grad) {
      ColumnView<Real> v{px.value.data(), cin, len, kernel, spec.stride,
                         static_cast<std::ptrdiff_t>(spec.padding), lout};
      simd::gemm_packed_b<Real>(Trans::No, cout, rows, wide, 1, gt.data(), wide,
                                pack_columns_transposed(v), 1, pw.grad_data(), rows);
    }
    if (!px.requires_grad) return;
    Real* gx = px.grad_data();
    if (spec.stride == 1 && spec.padding < kernel) {
      // Stride 1: the input gradient is a correlation of the output gradient
      // with the flipped kernel, again one gemm over the batch.
      std::vector<Real> wf(cin * cout * kernel);
      for (std::size_t o = 0; o < cout; ++o)
        for (std::size_t c = 0; c < cin; ++c)
          for (std::size_t t = 0; t < kernel; ++t)
            wf[(c * cout + o) * kernel + (kernel - 1 - t)] = pw.value[(o * cin + c) * kernel + t];
      ColumnView<Real> gv{self.grad.data(), cout, lout, kernel, 1,
                          static_cast<std::ptrdiff_t>(kernel - 1 - spec.padding), len};
      std::vector<Real> xt(cin * batch * len);
      simd::gemm_packed_b<Real>(Trans::No, cin, batch * len, cout * kernel, 1, wf.data(),
                                cout * kernel, pack_columns(gv), 0, xt.data(), batch * len);
      for (std::size_t c = 0; c < cin; ++c)
        for (std::size_t b = 0; b < batch; ++b) {
          const Real* src = xt.data() + (c * batch + b) * len;
          Real* dst = gx + (b * cin + c) * len;
          for (std::size_t l = 0; l < len; ++l) dst[l] += src[l];
        }
      return;
    }
    std::vector<Real> colb(rows * lout);
    for (std::size_t b = 0; b < batch; ++b) {
      const Real* gy = self.grad.data() + b * cout * lout;
      simd::gemm<Real>(Trans::Yes, Trans::No, rows, lout, cout, 1, pw.value.data(), rows, gy,
                       lout, 0, colb.data(), lout);
      col2im(colb.data(), cin, len, kernel, spec.stride, spec.padding, lout, gx + b * cin * len);
    }
  };
  return out;
}

template <class Real>
Var<Real> transposed_conv1d(const Var<Real>& x, const Var<Real>& weight, const Var<Real>& bias,
                            const ConvSpec& spec) {
  require(x->shape.size() == 3 && weight->shape.size() == 3 && weight->shape[0] == x->shape[1],
          "transposed_conv1d: input " + shape_string(x->shape) + " vs weight " +
              shape_string(weight->shape));
  const std::size_t batch = x->shape[0], cin = x->shape[1], len = x->shape[2];
  const std::size_t cout = weight->shape[1], kernel = weight->shape[2];
  require(!bias || bias->shape == Shape{cout}, "transposed_conv1d: bias shape");
  const std::size_t lout = transposed_conv1d_output_length(len, kernel, spec);
  const std::size_t rows = cout * kernel;

  std::vector<Real> y(batch * cout * lout, Real(0));
  std::vector<Real> col(rows * len);
  for (std::size_t b = 0; b < batch; ++b) {
    Real* yb = y.data() + b * cout * lout;
    simd::gemm<Real>(Trans::Yes, Trans::No, rows, len, cin, 1, weight->value.data(), rows,
                     x->value.data() + b * cin * len, len, 0, col.data(), len);
    col2im(col.data(), cout, lout, kernel, spec.stride, spec.padding, len, yb);
    if (bias)
      for (std::size_t o = 0; o < cout; ++o)
        for (std::size_t l = 0; l < lout; ++l) yb[o * lout + l] += bias->value[o];
  }
  std::vector<Var<Real>> parents{x, weight};
  if (bias) parents.push_back(bias);
  auto out = make_node<Real>("transposed_conv1d", {batch, cout, lout}, std::move(y),
                             std::move(parents));
  out->backward_rule = [=](Node<Real>& self) {
    auto& px = *self.parents[0];
    auto& pw = *self.parents[1];
    std::vector<Real> colb(rows * len);
    for (std::size_t b = 0; b < batch; ++b) {
      const Real* gy = self.grad.data() + b * cout * lout;
      im2col(gy, cout, lout, kernel, spec.stride, spec.padding, len, colb.data());
      if (px.requires_grad)
        simd::gemm<Real>(Trans::No, Trans::No, cin, len, rows, 1, pw.value.data(), rows,
                         colb.data(), len, 1, px.grad_data() + b * cin * len, len);
      if (pw.requires_grad)
        simd::gemm<Real>(Trans::No, Trans::Yes, cin, rows, len, 1,
                         px.value.data() + b * cin * len, len, colb.data(), len, 1,
                         pw.grad_data(), rows);
      if (self.parents.size() > 2 && self.parents[2]->requires_grad) {
        Real* gb = self.parents[2]->grad_data();
        for (std::size_t o = 0; o < cout; ++o)
          for (std::size_t l = 0; l < lout; ++l) gb[o] += gy[o * lout + l];
      }
    }
  };
  return out;
}

template <class Real>
Var<Real> leaky_relu(const Var<Real>& x, Real alpha) {
  return unary<Real>(
      x, "leaky_relu", [=](Real v) { return v > 0 ? v : alpha * v; },
      [=](Real v, Real) { return v > 0 ? Real(1) : alpha; });
}

template <class Real>
Var<Real> relu(const Var<Real>& x) {
  return unary<Real>(
      x, "relu", [](Real v) { return v > 0 ? v : Real(0); },
      [](Real v, Real) { return v > 0 ? Real(1) : Real(0); });
}

template <class Real>
Var<Real> tanh(const Var<Real>& x) {
  return unary<Real>(
      x, "tanh", [](Real v) { return std::tanh(v); }, [](Real, Real y) { return Real(1) - y * y; });
}

template <class Real>
Var<Real> sigmoid(const Var<Real>& x) {
  return unary<Real>(
      x, "sigmoid",
      [](Real v) {
        if (v >= 0) return Real(1) / (Real(1) + std::exp(-v));
        const Real e = std::exp(v);
        return e / (Real(1) + e);
      },
      [](Real, Real y) { return y * (Real(1) - y); });
}

template <class Real>
Var<Real> square(const Var<Real>& x) {
  return unary<Real>(
      x, "square", [](Real v) { return v * v; }, [](Real v, Real) { return Real(2) * v; });
}

template <class Real>
Var<Real> clamped_log(const Var<Real>& x, Real floor) {
  return unary<Real>(
      x, "clamped_log", [=](Real v) { return std::log(std::max(v, floor)); },
      [=](Real v, Real) { return v > floor ? Real(1) / v : Real(0); });
}

template <class Real>
Var<Real> sum(const Var<Real>& x) {
  Real acc = 0;
  for (Real v : x->value) acc += v;
  auto out = make_node<Real>("sum", {}, {acc}, {x});
  out->backward_rule = [](Node<Real>& self) {
    auto& in = *self.parents[0];
    if (!in.requires_grad) return;
    Real* g = in.grad_data();
    for (std::size_t i = 0; i < in.size(); ++i) g[i] += self.grad[0];
  };
  return out;
}

template <class Real>
Var<Real> mean(const Var<Real>& x) {
  require(x->size() > 0, "mean of an empty tensor");
  Real acc = 0;
  for (Real v : x->value) acc += v;
  const Real inv = Real(1) / static_cast<Real>(x->size());
  auto out = make_node<Real>("mean", {}, {acc * inv}, {x});
  out->backward_rule = [inv](Node<Real>& self) {
    auto& in = *self.parents[0];
    if (!in.requires_grad) return;
    Real* g = in.grad_data();
    for (std::size_t i = 0; i < in.size(); ++i) g[i] += self.grad[0] * inv;
  };
  return out;
}

template <class Real>
Var<Real> max(const Var<Real>& x) {
  require(x->size() > 0, "max of an empty tensor");
  const auto it = std::max_element(x->value.begin(), x->value.end());
  const auto arg = static_cast<std::size_t>(it - x->value.begin());
  auto out = make_node<Real>("max", {}, {*it}, {x});
  out->backward_rule = [arg](Node<Real>& self) {
    auto& in = *self.parents[0];
    if (in.requires_grad) in.grad_data()[arg] += self.grad[0];
  };
  return out;
}

template <class Real>
Var<Real> sum_last(const Var<Real>& x) {
  Shape shape = drop_last<Real>(x->shape);
  const std::size_t width = x->shape.back();
  const std::size_t rows = numel(shape);
  std::vector<Real> y(rows, Real(0));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < width; ++j) y[r] += x->value[r * width + j];
  auto out = make_node<Real>("sum_last", std::move(shape), std::move(y), {x});
  out->backward_rule = [width](Node<Real>& self) {
    auto& in = *self.parents[0];
    if (!in.requires_grad) return;
    Real* g = in.grad_data();
    for (std::size_t r = 0; r < self.size(); ++r)
      for (std::size_t j = 0; j < width; ++j) g[r * width + j] += self.grad[r];
  };
  return out;
}

template <class Real>
Var<Real> mean_last(const Var<Real>& x) {
  require(!x->shape.empty() && x->shape.back() > 0, "mean_last: empty trailing axis");
  return scale(sum_last(x), Real(1) / static_cast<Real>(x->shape.back()));
}

template <class Real>
Var<Real> max_last(const Var<Real>& x) {
  Shape shape = drop_last<Real>(x->shape);
  const std::size_t width = x->shape.back();
  require(width > 0, "max_last: empty trailing axis");
  const std::size_t rows = numel(shape);
  std::vector<Real> y(rows);
  std::vector<std::size_t> arg(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* row = x->value.data() + r * width;
    arg[r] = static_cast<std::size_t>(std::max_element(row, row + width) - row);
    y[r] = row[arg[r]];
  }
  auto out = make_node<Real>("max_last", std::move(shape), std::move(y), {x});
  out->backward_rule = [width, arg = std::move(arg)](Node<Real>& self) {
    auto& in = *self.parents[0];
    if (!in.requires_grad) return;
    Real* g = in.grad_data();
    for (std::size_t r = 0; r < self.size(); ++r) g[r * width + arg[r]] += self.grad[r];
  };
  return out;
}

template <class Real>
Var<Real> l2_squared(const Var<Real>& x) {
  Shape shape = drop_last<Real>(x->shape);
  const std::size_t width = x->shape.back();
  const std::size_t rows = numel(shape);
  std::vector<Real> y(rows, Real(0));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < width; ++j) {
      const Real v = x->value[r * width + j];
      y[r] += v * v;
    }
  auto out = make_node<Real>("l2_squared", std::move(shape), std::move(y), {x});
  out->backward_rule = [width](Node<Real>& self) {
    auto& in = *self.parents[0];
    if (!in.requires_grad) return;
    Real* g = in.grad_data();
    for (std::size_t r = 0; r < self.size(); ++r)
      for (std::size_t j = 0; j < width; ++j)
        g[r * width + j] += Real(2) * in.value[r * width + j] * self.grad[r];
  };
  return out;
}

template <class Real>
Var<Real> reshape(const Var<Real>& x, Shape shape) {
  require(numel(shape) == x->size(),
          "reshape: " + shape_string(x->shape) + " -> " + shape_string(shape));
  auto out = make_node<Real>("reshape", std::move(shape), x->value, {x});
  out->backward_rule = [](Node<Real>& self) {
    auto& in = *self.parents[0];
    if (!in.requires_grad) return;
    Real* g = in.grad_data();
    for (std::size_t i = 0; i < self.size(); ++i) g[i] += self.grad[i];
  };
  return out;
}

template <class Real>
Var<Real> slice_blocks(const Var<Real>& x, std::size_t n_blocks) {
  require(x->shape.size() == 2, "slice_blocks expects [batch, length]");
  if (n_blocks == 0 || x->shape[1] % n_blocks != 0)
    throw Error(ErrorCode::IndivisibleBlockCount, "slice_blocks: length " +
                                                      std::to_string(x->shape[1]) +
                                                      " not divisible by " + std::to_string(n_blocks));
  auto out = reshape(x, {x->shape[0], n_blocks, x->shape[1] / n_blocks});
  out->op = "slice_blocks";
  return out;
}

template <class Real>
Var<Real> spectral_magnitude(const Var<Real>& x, spectral::SpectrumScale scale) {
  require(!x->shape.empty() && x->shape.back() >= 2, "spectral_magnitude: trailing axis < 2");
  const std::size_t len = x->shape.back();
  const auto& table = spectral::detail::dft_table<Real>(len);
  const std::size_t bins = table.bins;
  const std::size_t rows = x->size() / len;
  Shape shape = x->shape;
  shape.back() = bins;
  std::vector<Real> y(rows * bins), re(rows * bins), im(rows * bins), power(rows * bins);
  for (std::size_t r = 0; r < rows; ++r)
    spectral::detail::power_spectrum<Real>(table, x->value.data() + r * len, scale,
                                           y.data() + r * bins, re.data() + r * bins,
                                           im.data() + r * bins, power.data() + r * bins);
  auto out = make_node<Real>("spectral_magnitude", std::move(shape), std::move(y), {x});
  out->backward_rule = [&table, scale, rows, len, bins, re = std::move(re), im = std::move(im),
                        power = std::move(power)](Node<Real>& self) {
    auto& in = *self.parents[0];
    if (!in.requires_grad) return;
    // d power_k / d x_t = (2/L) (re_k cos(2 pi k t/L) - im_k sin(2 pi k t/L)).
    std::vector<Real> g_re(rows * bins), g_im(rows * bins);
    const Real two_over_len = Real(2) / static_cast<Real>(len);
    for (std::size_t i = 0; i < rows * bins; ++i) {
      Real g = self.grad[i] * two_over_len;
      if (scale == spectral::SpectrumScale::Log)
        g /= power[i] + static_cast<Real>(spectral::kLogEpsilon);
      g_re[i] = g * re[i];
      g_im[i] = -g * im[i];
    }
    Real* gx = in.grad_data();
    simd::gemm<Real>(Trans::No, Trans::No, rows, len, bins, 1, g_re.data(), bins,
                     table.cos_table.data(), len, 1, gx, len);
    simd::gemm<Real>(Trans::No, Trans::No, rows, len, bins, 1, g_im.data(), bins,
                     table.sin_table.data(), len, 1, gx, len);
  };
  return out;
}

template <class Real>
Var<Real> pair_differences(const Var<Real>& x) {
  require(x->shape.size() == 3 && x->shape[1] >= 2, "pair_differences expects [B, N>=2, K]");
  const std::size_t batch = x->shape[0], n = x->shape[1], width = x->shape[2];
  const std::size_t pairs = n * (n - 1) / 2;
  std::vector<Real> y(batch * pairs * width);
  for (std::size_t b = 0; b < batch; ++b) {
    std::size_t p = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j, ++p) {
        const Real* xi = x->value.data() + (b * n + i) * width;
        const Real* xj = x->value.data() + (b * n + j) * width;
        Real* out = y.data() + (b * pairs + p) * width;
        for (std::size_t k = 0; k < width; ++k) out[k] = xi[k] - xj[k];
      }
  }
  auto out = make_node<Real>("pair_differences", {batch, pairs, width}, std::move(y), {x});
  out->backward_rule = [batch, n, pairs, width](Node<Real>& self) {
    auto& in = *self.parents[0];
    if (!in.requires_grad) return;
    Real* g = in.grad_data();
    for (std::size_t b = 0; b < batch; ++b) {
      std::size_t p = 0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j, ++p) {
          const Real* gy = self.grad.data() + (b * pairs + p) * width;
          Real* gi = g + (b * n + i) * width;
          Real* gj = g + (b * n + j) * width;
          for (std::size_t k = 0; k < width; ++k) {
            gi[k] += gy[k];
            gj[k] -= gy[k];
          }
        }
    }
  };
  return out;
}

template <class Real>
Var<Real> softmax_cross_entropy(const Var<Real>& logits, std::span<const int> labels) {
  require(logits->shape.size() == 2 && logits->shape[0] == labels.size() && !labels.empty(),
          "softmax_cross_entropy: logits " + shape_string(logits->shape) + " vs " +
              std::to_string(labels.size()) + " labels");
  const std::size_t batch = logits->shape[0], classes = logits->shape[1];
  std::vector<Real> prob(batch * classes);
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const Real* z = logits->value.data() + b * classes;
    const auto label = static_cast<std::size_t>(labels[b]);
    require(label < classes, "softmax_cross_entropy: label out of range");
    const Real zmax = *std::max_element(z, z + classes);
    Real denom = 0;
    for (std::size_t c = 0; c < classes; ++c) denom += std::exp(z[c] - zmax);
    for (std::size_t c = 0; c < classes; ++c) prob[b * classes + c] = std::exp(z[c] - zmax) / denom;
    loss += -(static_cast<double>(z[label] - zmax) - std::log(static_cast<double>(denom)));
  }
  auto out = make_node<Real>("softmax_cross_entropy", {},
                             {static_cast<Real>(loss / static_cast<double>(batch))}, {logits});
  std::vector<int> label_copy(labels.begin(), labels.end());
  out->backward_rule = [batch, classes, prob = std::move(prob),
                        label_copy = std::move(label_copy)](Node<Real>& self) {
    auto& in = *self.parents[0];
    if (!in.requires_grad) return;
    Real* g = in.grad_data();
    const Real s = self.grad[0] / static_cast<Real>(batch);
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t c = 0; c < classes; ++c) {
        const Real target = static_cast<std::size_t>(label_copy[b]) == c ? Real(1) : Real(0);
        g[b * classes + c] += s * (prob[b * classes + c] - target);
      }
  };
  return out;
}

template <class Real>
Var<Real> detach(const Var<Real>& x) {
  return constant<Real>(x->shape, x->value);
}

#define LSMGAN_INSTANTIATE(Real)                                                                \
  template Var<Real> add<Real>(const Var<Real>&, const Var<Real>&);                             \
  template Var<Real> sub<Real>(const Var<Real>&, const Var<Real>&);                             \
  template Var<Real> mul<Real>(const Var<Real>&, const Var<Real>&);                             \
  template Var<Real> scale<Real>(const Var<Real>&, Real);                                       \
  template Var<Real> affine<Real>(const Var<Real>&, Real, Real);                                \
  template Var<Real> matmul<Real>(const Var<Real>&, const Var<Real>&);                          \
  template Var<Real> dense<Real>(const Var<Real>&, const Var<Real>&, const Var<Real>&);         \
  template Var<Real> conv1d<Real>(const Var<Real>&, const Var<Real>&, const Var<Real>&,         \
                                  const ConvSpec&);                                             \
  template Var<Real> transposed_conv1d<Real>(const Var<Real>&, const Var<Real>&,                \
                                             const Var<Real>&, const ConvSpec&);                \
  template Var<Real> leaky_relu<Real>(const Var<Real>&, Real);                                  \
  template Var<Real> relu<Real>(const Var<Real>&);                                              \
  template Var<Real> tanh<Real>(const Var<Real>&);                                              \
  template Var<Real> sigmoid<Real>(const Var<Real>&);                                           \
  template Var<Real> square<Real>(const Var<Real>&);                                            \
  template Var<Real> clamped_log<Real>(const Var<Real>&, Real);                                 \
  template Var<Real> sum<Real>(const Var<Real>&);                                               \
  template Var<Real> mean<Real>(const Var<Real>&);                                              \
  template Var<Real> max<Real>(const Var<Real>&);                                               \
  template Var<Real> sum_last<Real>(const Var<Real>&);                                          \
  template Var<Real> mean_last<Real>(const Var<Real>&);                                         \
  template Var<Real> max_last<Real>(const Var<Real>&);                                          \
  template Var<Real> l2_squared<Real>(const Var<Real>&);                                        \
  template Var<Real> reshape<Real>(const Var<Real>&, Shape);                                    \
  template Var<Real> slice_blocks<Real>(const Var<Real>&, std::size_t);                         \
  template Var<Real> spectral_magnitude<Real>(const Var<Real>&, spectral::SpectrumScale);       \
  template Var<Real> pair_differences<Real>(const Var<Real>&);                                  \
  template Var<Real> softmax_cross_entropy<Real>(const Var<Real>&, std::span<const int>);       \
  template Var<Real> detach<Real>(const Var<Real>&);

LSMGAN_INSTANTIATE(float)
LSMGAN_INSTANTIATE(double)
#undef LSMGAN_INSTANTIATE

}  // namespace lsmgan::ad
