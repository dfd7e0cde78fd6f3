#pragma once

// Network definitions shared by the GAN and the classifier. All networks
// are templates over the scalar type; training uses float, gradient and
// structural checks use double.

#include <cstdint>
#include <string>
#include <vector>

#include "lsmgan/ad/checkpoint.hpp"
#include "lsmgan/ad/graph.hpp"
#include "lsmgan/ad/ops.hpp"

namespace lsmgan::nn {

using ad::ConvSpec;
using ad::NamedParam;
using ad::Var;

template <class Real>
struct Conv1dLayer {
  Var<Real> weight;  // [out, in, kernel]
  Var<Real> bias;    // [out]
  ConvSpec spec;

  Var<Real> operator()(const Var<Real>& x) const { return ad::conv1d(x, weight, bias, spec); }
};

template <class Real>
struct TransposedConv1dLayer {
  Var<Real> weight;  // [in, out, kernel]
  Var<Real> bias;
  ConvSpec spec;

  Var<Real> operator()(const Var<Real>& x) const {
    return ad::transposed_conv1d(x, weight, bias, spec);
  }
};

template <class Real>
struct DenseLayer {
  Var<Real> weight;  // [out, in]
  Var<Real> bias;

  Var<Real> operator()(const Var<Real>& x) const { return ad::dense(x, weight, bias); }
};

/// Snapshot of parameter values, used for best-epoch restore and cloning.
template <class Real>
using ParamValues = std::vector<std::vector<Real>>;

template <class Real>
ParamValues<Real> snapshot(const std::vector<NamedParam<Real>>& params);
template <class Real>
void restore(const std::vector<NamedParam<Real>>& params, const ParamValues<Real>& values);
template <class Real>
std::vector<Var<Real>> vars_of(const std::vector<NamedParam<Real>>& params);

enum class GeneratorKind { Conventional100, SameLength1200 };

std::string_view to_string(GeneratorKind kind);
GeneratorKind parse_generator_kind(std::string_view text);
std::size_t noise_length(GeneratorKind kind);

inline constexpr std::size_t kSignalLength = 1200;
inline constexpr float kLeakySlope = 0.2f;

/// Conventional100: dense 100->300, then transposed convolutions
/// (stride 2, 2, 1; channels 64, 32, 1; kernel 16), tanh rescaled to [0,1].
/// SameLength1200: four length-preserving convolutions (kernel 31; channels
/// 32, 32, 16, 1) with a sigmoid head; nothing is upsampled.
template <class Real>
class Generator {
 public:
  Generator(GeneratorKind kind, std::uint64_t seed);

  GeneratorKind kind() const { return kind_; }
  std::size_t noise_length() const { return nn::noise_length(kind_); }

  /// noise [B, noise_length] -> [B, 1200]
  Var<Real> forward(const Var<Real>& noise) const;

  std::vector<NamedParam<Real>> named_parameters() const;
  std::vector<Var<Real>> parameters() const { return vars_of(named_parameters()); }
  Generator clone() const;

 private:
  GeneratorKind kind_;
  DenseLayer<Real> project_;
  std::vector<TransposedConv1dLayer<Real>> up_;
  std::vector<Conv1dLayer<Real>> same_;
};

enum class DiscriminatorHead { Sigmoid, Raw };

/// Four stride-2 convolutions (channels 16, 32, 64, 64; kernel 16) and a
/// dense layer to one score per signal.
template <class Real>
class Discriminator {
 public:
  Discriminator(std::uint64_t seed, DiscriminatorHead head);

  /// x [B, 1200] -> [B]
  Var<Real> forward(const Var<Real>& x) const;
  DiscriminatorHead head() const { return head_; }

  std::vector<NamedParam<Real>> named_parameters() const;
  std::vector<Var<Real>> parameters() const { return vars_of(named_parameters()); }

 private:
  DiscriminatorHead head_;
  std::vector<Conv1dLayer<Real>> convs_;
  DenseLayer<Real> out_;
};

template <class Real>
struct ResidualBlock {
  Conv1dLayer<Real> conv1;
  Conv1dLayer<Real> conv2;
  /// 1x1 projection when the block changes width or stride; else empty.
  Conv1dLayer<Real> shortcut;

  Var<Real> operator()(const Var<Real>& x) const;
};

/// Small residual 1-D network: stride-2 stem (kernel 15, 16 channels),
/// four residual blocks (kernel 7; widths 16, 16, 32, 32; block 3 halves
/// the length), global average pool, dense to two logits (NonAF, AF).
template <class Real>
class Classifier {
 public:
  explicit Classifier(std::uint64_t seed);

  /// x [B, 1200] -> logits [B, 2]
  Var<Real> forward(const Var<Real>& x) const;

  std::vector<ResidualBlock<Real>>& blocks() { return blocks_; }
  const std::vector<ResidualBlock<Real>>& blocks() const { return blocks_; }
  const Conv1dLayer<Real>& stem() const { return stem_; }

  std::vector<NamedParam<Real>> named_parameters() const;
  std::vector<Var<Real>> parameters() const { return vars_of(named_parameters()); }
  Classifier clone() const;

 private:
  Conv1dLayer<Real> stem_;
  std::vector<ResidualBlock<Real>> blocks_;
  DenseLayer<Real> head_;
};

}  // namespace lsmgan::nn
