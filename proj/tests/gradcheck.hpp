#pragma once

// Central finite-difference checks for the differentiation engine, shared by
// the unit tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "lsmgan/ad/graph.hpp"
#include "lsmgan/ad/ops.hpp"
#include "lsmgan/rng.hpp"

namespace gradcheck {

using lsmgan::Rng;
using lsmgan::ad::Shape;
using lsmgan::ad::Var;

using Inputs = std::vector<Var<double>>;
using OpFn = std::function<Var<double>(const Inputs&)>;
using Sampler = std::function<std::vector<double>(Rng&, std::size_t)>;

inline constexpr double kStep = 1e-4;
inline constexpr double kRelTol = 1e-3;
inline constexpr double kAbsFloor = 1e-6;

struct OpCase {
  std::string name;
  std::vector<Shape> shapes;
  OpFn fn;
  Sampler sampler;
};

struct Outcome {
  std::string name;
  std::size_t seeds = 0;
  std::size_t compared = 0;
  /// max over entries of |analytic - numeric| / max(|analytic|, |numeric|, floor),
  /// with floor = kAbsFloor / kRelTol so that differences below kAbsFloor pass.
  double max_rel_error = 0.0;
  bool passed() const { return max_rel_error < kRelTol; }
};

inline std::vector<double> uniform_sampler(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

/// Values bounded away from zero, for ops with a kink there.
inline std::vector<double> away_from_zero(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.05, 1.0);
  return v;
}

inline std::vector<double> positive_sampler(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(0.1, 2.0);
  return v;
}

/// Distinct values with gaps far above the step, for max reductions.
inline std::vector<double> well_separated(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = 0.01 * static_cast<double>(i) + rng.uniform(0.0, 0.002);
  rng.shuffle(std::span<double>(v));
  return v;
}

/// loss = sum(op(inputs) * R) with a fixed random R, so every output entry
/// carries a distinct weight.
inline Var<double> weighted_loss(const Var<double>& out, const std::vector<double>& weights) {
  auto r = lsmgan::ad::constant<double>(out->shape, weights);
  return lsmgan::ad::sum(lsmgan::ad::mul(out, r));
}

inline Outcome run(const OpCase& c, std::size_t n_seeds, std::uint64_t base_seed = 1000) {
  Outcome outcome{c.name, n_seeds, 0, 0.0};
  const double floor = kAbsFloor / kRelTol;
  for (std::size_t s = 0; s < n_seeds; ++s) {
    Rng rng(lsmgan::derive_seed(base_seed, s));
    Inputs inputs;
    for (std::size_t i = 0; i < c.shapes.size(); ++i)
      inputs.push_back(lsmgan::ad::parameter<double>(
          c.shapes[i], c.sampler(rng, lsmgan::ad::numel(c.shapes[i])), "in" + std::to_string(i)));
    const auto probe = c.fn(inputs);
    std::vector<double> weights(probe->size());
    for (auto& w : weights) w = rng.uniform(0.5, 1.5) * (rng.uniform() < 0.5 ? -1.0 : 1.0);

    lsmgan::ad::backward(weighted_loss(c.fn(inputs), weights));
    for (const auto& in : inputs) {
      const std::vector<double> analytic =
          in->grad.empty() ? std::vector<double>(in->size(), 0.0) : in->grad;
      for (std::size_t i = 0; i < in->size(); ++i) {
        const double saved = in->value[i];
        in->value[i] = saved + kStep;
        const double up = weighted_loss(c.fn(inputs), weights)->value[0];
        in->value[i] = saved - kStep;
        const double down = weighted_loss(c.fn(inputs), weights)->value[0];
        in->value[i] = saved;
        const double numeric = (up - down) / (2.0 * kStep);
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
        outcome.max_rel_error = std::max(outcome.max_rel_error, std::abs(analytic[i] - numeric) / denom);
        ++outcome.compared;
      }
    }
  }
  return outcome;
}

/// Every differentiable op of the engine with representative shapes.
inline std::vector<OpCase> all_cases() {
  namespace ad = lsmgan::ad;
  using lsmgan::spectral::SpectrumScale;
  const Sampler u = uniform_sampler;
  std::vector<OpCase> cases = {
      {"add", {{3, 4}, {3, 4}}, [](const Inputs& x) { return ad::add(x[0], x[1]); }, u},
      {"sub", {{3, 4}, {3, 4}}, [](const Inputs& x) { return ad::sub(x[0], x[1]); }, u},
      {"multiply", {{3, 4}, {3, 4}}, [](const Inputs& x) { return ad::mul(x[0], x[1]); }, u},
      {"scale", {{5}}, [](const Inputs& x) { return ad::scale(x[0], 2.5); }, u},
      {"affine", {{5}}, [](const Inputs& x) { return ad::affine(x[0], -1.5, 0.25); }, u},
      {"matmul", {{3, 5}, {5, 4}}, [](const Inputs& x) { return ad::matmul(x[0], x[1]); }, u},
      {"dense", {{3, 5}, {4, 5}, {4}}, [](const Inputs& x) { return ad::dense(x[0], x[1], x[2]); }, u},
      {"conv1d stride1 pad1", {{2, 3, 11}, {4, 3, 3}, {4}},
       [](const Inputs& x) { return ad::conv1d(x[0], x[1], x[2], ad::ConvSpec{1, 1, 0}); }, u},
      {"conv1d stride2 pad3", {{2, 2, 13}, {3, 2, 5}, {3}},
       [](const Inputs& x) { return ad::conv1d(x[0], x[1], x[2], ad::ConvSpec{2, 3, 0}); }, u},
      {"conv1d stride3 nobias", {{1, 2, 16}, {2, 2, 4}},
       [](const Inputs& x) { return ad::conv1d<double>(x[0], x[1], nullptr, ad::ConvSpec{3, 0, 0}); }, u},
      {"transposed_conv1d stride2", {{2, 3, 6}, {3, 2, 4}, {2}},
       [](const Inputs& x) { return ad::transposed_conv1d(x[0], x[1], x[2], ad::ConvSpec{2, 1, 0}); }, u},
      {"transposed_conv1d output_padding", {{1, 2, 5}, {2, 3, 3}, {3}},
       [](const Inputs& x) { return ad::transposed_conv1d(x[0], x[1], x[2], ad::ConvSpec{2, 1, 1}); }, u},
      {"leaky_relu", {{12}}, [](const Inputs& x) { return ad::leaky_relu(x[0], 0.2); }, away_from_zero},
      {"relu", {{12}}, [](const Inputs& x) { return ad::relu(x[0]); }, away_from_zero},
      {"tanh", {{12}}, [](const Inputs& x) { return ad::tanh(x[0]); }, u},
      {"sigmoid", {{12}}, [](const Inputs& x) { return ad::sigmoid(x[0]); }, u},
      {"square", {{12}}, [](const Inputs& x) { return ad::square(x[0]); }, u},
      {"clamped_log", {{12}}, [](const Inputs& x) { return ad::clamped_log(x[0], 1e-7); }, positive_sampler},
      {"sum", {{3, 4}}, [](const Inputs& x) { return ad::sum(x[0]); }, u},
      {"mean", {{3, 4}}, [](const Inputs& x) { return ad::mean(x[0]); }, u},
      {"max", {{3, 4}}, [](const Inputs& x) { return ad::max(x[0]); }, well_separated},
      {"sum_last", {{3, 4}}, [](const Inputs& x) { return ad::sum_last(x[0]); }, u},
      {"mean_last", {{3, 4}}, [](const Inputs& x) { return ad::mean_last(x[0]); }, u},
      {"max_last", {{3, 4}}, [](const Inputs& x) { return ad::max_last(x[0]); }, well_separated},
      {"l2_squared", {{3, 4}}, [](const Inputs& x) { return ad::l2_squared(x[0]); }, u},
      {"reshape", {{3, 4}}, [](const Inputs& x) { return ad::reshape(x[0], {4, 3}); }, u},
      {"slice_blocks", {{2, 12}}, [](const Inputs& x) { return ad::slice_blocks(x[0], 3); }, u},
      {"spectral_magnitude Linear", {{2, 16}},
       [](const Inputs& x) { return ad::spectral_magnitude(x[0], SpectrumScale::Linear); }, u},
      {"spectral_magnitude Log", {{2, 16}},
       [](const Inputs& x) { return ad::spectral_magnitude(x[0], SpectrumScale::Log); }, u},
      {"spectral_magnitude Log odd length", {{1, 9}},
       [](const Inputs& x) { return ad::spectral_magnitude(x[0], SpectrumScale::Log); }, u},
      {"pair_differences", {{2, 4, 3}}, [](const Inputs& x) { return ad::pair_differences(x[0]); }, u},
      {"softmax_cross_entropy", {{4, 3}},
       [](const Inputs& x) {
         static const std::vector<int> labels{0, 2, 1, 2};
         return ad::softmax_cross_entropy<double>(x[0], labels);
       },
       u},
  };
  return cases;
}

}  // namespace gradcheck
