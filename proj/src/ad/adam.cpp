#include "lsmgan/ad/adam.hpp"

#include <algorithm>
#include <cmath>

#include "lsmgan/error.hpp"

namespace lsmgan::ad {

template <class Real>
void adam_step(std::span<const Var<Real>> params, AdamState<Real>& state) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p->size(), 0.0);
      state.v.emplace_back(p->size(), 0.0);
    }
  }
  if (state.m.size() != params.size())
    throw Error(ErrorCode::ShapeMismatch, "Adam state does not match the parameter set");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i];
    if (p.grad.size() != p.value.size()) continue;  // never touched by backward
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (m.size() != p.size()) throw Error(ErrorCode::ShapeMismatch, "Adam moment shape mismatch");
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double g = static_cast<double>(p.grad[j]);
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g;
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g * g;
      const double update = state.lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + state.eps);
      p.value[j] = static_cast<Real>(static_cast<double>(p.value[j]) - update);
    }
    std::fill(p.grad.begin(), p.grad.end(), Real(0));
  }
}

template <class Real>
void clip_values(std::span<const Var<Real>> params, Real bound) {
  for (const auto& p : params)
    for (Real& x : p->value) x = std::clamp(x, -bound, bound);
}

template void adam_step<float>(std::span<const Var<float>>, AdamState<float>&);
template void adam_step<double>(std::span<const Var<double>>, AdamState<double>&);
template void clip_values<float>(std::span<const Var<float>>, float);
template void clip_values<double>(std::span<const Var<double>>, double);

}  // namespace lsmgan::ad
