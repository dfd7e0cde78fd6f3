#pragma once

// Differentiable operations. Layout conventions (row-major):
//   dense/matmul operands [rows, features]
//   convolution activations [batch, channels, length]
//   conv1d weights [out_channels, in_channels, kernel]
//   transposed_conv1d weights [in_channels, out_channels, kernel]
// Reductions named *_last reduce the trailing axis; sum/mean/max reduce
// everything to a single-element node with shape {}.

#include <cstddef>
#include <span>

#include "lsmgan/ad/graph.hpp"
#include "lsmgan/spectral.hpp"

namespace lsmgan::ad {

struct ConvSpec {
  std::size_t stride = 1;
  std::size_t padding = 0;
  /// Extra trailing outputs of a transposed convolution (ignored by conv1d).
  std::size_t output_padding = 0;
};

std::size_t conv1d_output_length(std::size_t length, std::size_t kernel, const ConvSpec& spec);
std::size_t transposed_conv1d_output_length(std::size_t length, std::size_t kernel,
                                            const ConvSpec& spec);

template <class Real> Var<Real> add(const Var<Real>& a, const Var<Real>& b);
template <class Real> Var<Real> sub(const Var<Real>& a, const Var<Real>& b);
template <class Real> Var<Real> mul(const Var<Real>& a, const Var<Real>& b);
template <class Real> Var<Real> scale(const Var<Real>& a, Real factor);
/// factor * a + shift, elementwise.
template <class Real> Var<Real> affine(const Var<Real>& a, Real factor, Real shift);

template <class Real> Var<Real> matmul(const Var<Real>& a, const Var<Real>& b);
/// x [B, in], weight [out, in], bias [out] -> [B, out]
template <class Real>
Var<Real> dense(const Var<Real>& x, const Var<Real>& weight, const Var<Real>& bias);

/// bias may be null.
template <class Real>
Var<Real> conv1d(const Var<Real>& x, const Var<Real>& weight, const Var<Real>& bias,
                 const ConvSpec& spec);
template <class Real>
Var<Real> transposed_conv1d(const Var<Real>& x, const Var<Real>& weight, const Var<Real>& bias,
                            const ConvSpec& spec);

template <class Real> Var<Real> leaky_relu(const Var<Real>& x, Real alpha);
template <class Real> Var<Real> relu(const Var<Real>& x);
template <class Real> Var<Real> tanh(const Var<Real>& x);
template <class Real> Var<Real> sigmoid(const Var<Real>& x);
template <class Real> Var<Real> square(const Var<Real>& x);
/// log(max(x, floor)); the gradient is zero where the clamp is active.
template <class Real> Var<Real> clamped_log(const Var<Real>& x, Real floor);

template <class Real> Var<Real> sum(const Var<Real>& x);
template <class Real> Var<Real> mean(const Var<Real>& x);
/// Gradient flows to the first maximal element only.
template <class Real> Var<Real> max(const Var<Real>& x);
template <class Real> Var<Real> sum_last(const Var<Real>& x);
template <class Real> Var<Real> mean_last(const Var<Real>& x);
template <class Real> Var<Real> max_last(const Var<Real>& x);
/// Sum of squares over the trailing axis.
template <class Real> Var<Real> l2_squared(const Var<Real>& x);

template <class Real> Var<Real> reshape(const Var<Real>& x, Shape shape);
/// [B, L] -> [B, n, L/n]; throws IndivisibleBlockCount.
template <class Real> Var<Real> slice_blocks(const Var<Real>& x, std::size_t n_blocks);
/// Periodogram over the trailing axis: [..., L] -> [..., L/2 + 1].
template <class Real>
Var<Real> spectral_magnitude(const Var<Real>& x, spectral::SpectrumScale scale);
/// [B, N, K] -> [B, N(N-1)/2, K] with rows x_i - x_j for i < j.
template <class Real> Var<Real> pair_differences(const Var<Real>& x);

/// Mean cross-entropy of softmax(logits [B, C]) against integer labels.
template <class Real>
Var<Real> softmax_cross_entropy(const Var<Real>& logits, std::span<const int> labels);

/// Value copy with no gradient path.
template <class Real> Var<Real> detach(const Var<Real>& x);

}  // namespace lsmgan::ad
