#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lsmgan/ad/graph.hpp"

namespace lsmgan::ad {

template <class Real>
struct AdamState {
  std::size_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update over params, then zeroes their gradients.
/// Moment buffers are created on the first call.
template <class Real>
void adam_step(std::span<const Var<Real>> params, AdamState<Real>& state);

/// Clamp every parameter value into [-bound, bound].
template <class Real>
void clip_values(std::span<const Var<Real>> params, Real bound);

}  // namespace lsmgan::ad
