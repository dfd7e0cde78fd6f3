#include "lsmgan/nn.hpp"

#include <cmath>

#include "lsmgan/error.hpp"
#include "lsmgan/rng.hpp"

namespace lsmgan::nn {
namespace {

// Kaiming-uniform: U(-b, b) with b = gain * sqrt(3 / fan_in).
template <class Real>
Var<Real> kaiming(Rng& rng, ad::Shape shape, double fan_in, double slope, const std::string& name) {
  const double gain = std::sqrt(2.0 / (1.0 + slope * slope));
  const double bound = gain * std::sqrt(3.0 / fan_in);
  std::vector<Real> v(ad::numel(shape));
  for (Real& x : v) x = static_cast<Real>(rng.uniform(-bound, bound));
  return ad::parameter<Real>(std::move(shape), std::move(v), name);
}

template <class Real>
Var<Real> zeros(ad::Shape shape, const std::string& name) {
  const std::size_t n = ad::numel(shape);
  return ad::parameter<Real>(std::move(shape), std::vector<Real>(n, Real(0)), name);
}

template <class Real>
Conv1dLayer<Real> make_conv(Rng& rng, std::size_t in, std::size_t out, std::size_t kernel,
                            ConvSpec spec, double slope, const std::string& name) {
  return {kaiming<Real>(rng, {out, in, kernel}, static_cast<double>(in * kernel), slope, name + ".w"),
          zeros<Real>({out}, name + ".b"), spec};
}

template <class Real>
TransposedConv1dLayer<Real> make_tconv(Rng& rng, std::size_t in, std::size_t out,
                                       std::size_t kernel, ConvSpec spec, double slope,
                                       const std::string& name) {
  const double fan_in = static_cast<double>(in * kernel) / static_cast<double>(spec.stride);
  return {kaiming<Real>(rng, {in, out, kernel}, fan_in, slope, name + ".w"),
          zeros<Real>({out}, name + ".b"), spec};
}

template <class Real>
DenseLayer<Real> make_dense(Rng& rng, std::size_t in, std::size_t out, double slope,
                            const std::string& name) {
  return {kaiming<Real>(rng, {out, in}, static_cast<double>(in), slope, name + ".w"),
          zeros<Real>({out}, name + ".b")};
}

template <class Real>
void push(std::vector<NamedParam<Real>>& out, const Var<Real>& v) {
  if (v) out.push_back({v->op, v});
}

template <class Real>
Var<Real> deep_copy(const Var<Real>& v) {
  return v ? ad::parameter<Real>(v->shape, v->value, v->op) : nullptr;
}

}  // namespace

template <class Real>
ParamValues<Real> snapshot(const std::vector<NamedParam<Real>>& params) {
  ParamValues<Real> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(p.var->value);
  return out;
}

template <class Real>
void restore(const std::vector<NamedParam<Real>>& params, const ParamValues<Real>& values) {
  if (params.size() != values.size())
    throw Error(ErrorCode::ShapeMismatch, "snapshot does not match the network");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].var->value.size() != values[i].size())
      throw Error(ErrorCode::ShapeMismatch, "snapshot tensor size differs for " + params[i].name);
    params[i].var->value = values[i];
  }
}

template <class Real>
std::vector<Var<Real>> vars_of(const std::vector<NamedParam<Real>>& params) {
  std::vector<Var<Real>> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(p.var);
  return out;
}

std::string_view to_string(GeneratorKind kind) {
  return kind == GeneratorKind::Conventional100 ? "Conventional100" : "SameLength1200";
}

GeneratorKind parse_generator_kind(std::string_view text) {
  if (text == "Conventional100") return GeneratorKind::Conventional100;
  if (text == "SameLength1200") return GeneratorKind::SameLength1200;
  throw Error(ErrorCode::ConfigError, "unknown generator kind '" + std::string(text) + "'");
}

std::size_t noise_length(GeneratorKind kind) {
  return kind == GeneratorKind::Conventional100 ? 100 : kSignalLength;
}

template <class Real>
Generator<Real>::Generator(GeneratorKind kind, std::uint64_t seed) : kind_(kind) {
  Rng rng(seed);
  const double slope = kLeakySlope;
  if (kind == GeneratorKind::Conventional100) {
    project_ = make_dense<Real>(rng, 100, 300, slope, "g.project");
    up_.push_back(make_tconv<Real>(rng, 1, 64, 16, {2, 7, 0}, slope, "g.up0"));
    up_.push_back(make_tconv<Real>(rng, 64, 32, 16, {2, 7, 0}, slope, "g.up1"));
    up_.push_back(make_tconv<Real>(rng, 32, 1, 16, {1, 8, 1}, 1.0, "g.up2"));
  } else {
    const std::size_t widths[] = {1, 32, 32, 16, 1};
    for (std::size_t i = 0; i < 4; ++i)
      same_.push_back(make_conv<Real>(rng, widths[i], widths[i + 1], 31, {1, 15, 0},
                                      i + 1 < 4 ? slope : 1.0, "g.conv" + std::to_string(i)));
  }
}

template <class Real>
Var<Real> Generator<Real>::forward(const Var<Real>& noise) const {
  if (noise->shape.size() != 2 || noise->shape[1] != noise_length())
    throw Error(ErrorCode::ShapeMismatch, "generator expects noise [B, " +
                                              std::to_string(noise_length()) + "], got " +
                                              ad::shape_string(noise->shape));
  const std::size_t batch = noise->shape[0];
  const Real slope = static_cast<Real>(kLeakySlope);
  Var<Real> h;
  if (kind_ == GeneratorKind::Conventional100) {
    h = ad::leaky_relu(project_(noise), slope);
    h = ad::reshape(h, {batch, 1, 300});
    for (std::size_t i = 0; i < up_.size(); ++i) {
      h = up_[i](h);
      if (i + 1 < up_.size()) h = ad::leaky_relu(h, slope);
    }
    h = ad::affine(ad::tanh(h), Real(0.5), Real(0.5));
  } else {
    h = ad::reshape(noise, {batch, 1, kSignalLength});
    for (std::size_t i = 0; i < same_.size(); ++i) {
      h = same_[i](h);
      if (i + 1 < same_.size()) h = ad::leaky_relu(h, slope);
    }
    h = ad::sigmoid(h);
  }
  return ad::reshape(h, {batch, kSignalLength});
}

template <class Real>
std::vector<NamedParam<Real>> Generator<Real>::named_parameters() const {
  std::vector<NamedParam<Real>> out;
  push(out, project_.weight);
  push(out, project_.bias);
  for (const auto& l : up_) {
    push(out, l.weight);
    push(out, l.bias);
  }
  for (const auto& l : same_) {
    push(out, l.weight);
    push(out, l.bias);
  }
  return out;
}

template <class Real>
Generator<Real> Generator<Real>::clone() const {
  Generator copy = *this;
  copy.project_ = {deep_copy(project_.weight), deep_copy(project_.bias)};
  for (auto& l : copy.up_) {
    l.weight = deep_copy(l.weight);
    l.bias = deep_copy(l.bias);
  }
  for (auto& l : copy.same_) {
    l.weight = deep_copy(l.weight);
    l.bias = deep_copy(l.bias);
  }
  return copy;
}

template <class Real>
Discriminator<Real>::Discriminator(std::uint64_t seed, DiscriminatorHead head) : head_(head) {
  Rng rng(seed);
  const std::size_t widths[] = {1, 16, 32, 64, 64};
  for (std::size_t i = 0; i < 4; ++i)
    convs_.push_back(make_conv<Real>(rng, widths[i], widths[i + 1], 16, {2, 7, 0}, kLeakySlope,
                                     "d.conv" + std::to_string(i)));
  out_ = make_dense<Real>(rng, 64 * 75, 1, 1.0, "d.out");
}

template <class Real>
Var<Real> Discriminator<Real>::forward(const Var<Real>& x) const {
  if (x->shape.size() != 2 || x->shape[1] != kSignalLength)
    throw Error(ErrorCode::ShapeMismatch, "discriminator expects [B, 1200], got " +
                                              ad::shape_string(x->shape));
  const std::size_t batch = x->shape[0];
  Var<Real> h = ad::reshape(x, {batch, 1, kSignalLength});
  for (const auto& c : convs_) h = ad::leaky_relu(c(h), static_cast<Real>(kLeakySlope));
  h = ad::reshape(h, {batch, h->size() / batch});
  h = ad::reshape(out_(h), {batch});
  return head_ == DiscriminatorHead::Sigmoid ? ad::sigmoid(h) : h;
}

template <class Real>
std::vector<NamedParam<Real>> Discriminator<Real>::named_parameters() const {
  std::vector<NamedParam<Real>> out;
  for (const auto& l : convs_) {
    push(out, l.weight);
    push(out, l.bias);
  }
  push(out, out_.weight);
  push(out, out_.bias);
  return out;
}

template <class Real>
Var<Real> ResidualBlock<Real>::operator()(const Var<Real>& x) const {
  Var<Real> h = ad::relu(conv1(x));
  h = conv2(h);
  Var<Real> skip = shortcut.weight ? shortcut(x) : x;
  return ad::relu(ad::add(h, skip));
}

template <class Real>
Classifier<Real>::Classifier(std::uint64_t seed) {
  Rng rng(seed);
  stem_ = make_conv<Real>(rng, 1, 16, 15, {2, 7, 0}, 0.0, "c.stem");
  struct Plan {
    std::size_t in, out, stride;
  };
  const Plan plans[] = {{16, 16, 1}, {16, 16, 1}, {16, 32, 2}, {32, 32, 1}};
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& p = plans[i];
    const std::string name = "c.block" + std::to_string(i);
    ResidualBlock<Real> b;
    b.conv1 = make_conv<Real>(rng, p.in, p.out, 7, {p.stride, 3, 0}, 0.0, name + ".conv1");
    b.conv2 = make_conv<Real>(rng, p.out, p.out, 7, {1, 3, 0}, 0.0, name + ".conv2");
    if (p.in != p.out || p.stride != 1) {
      b.shortcut = make_conv<Real>(rng, p.in, p.out, 1, {p.stride, 0, 0}, 1.0, name + ".proj");
      b.shortcut.bias = nullptr;
    }
    blocks_.push_back(std::move(b));
  }
  head_ = make_dense<Real>(rng, 32, 2, 1.0, "c.head");
}

template <class Real>
Var<Real> Classifier<Real>::forward(const Var<Real>& x) const {
  if (x->shape.size() != 2 || x->shape[1] != kSignalLength)
    throw Error(ErrorCode::ShapeMismatch, "classifier expects [B, 1200], got " +
                                              ad::shape_string(x->shape));
  const std::size_t batch = x->shape[0];
  Var<Real> h = ad::relu(stem_(ad::reshape(x, {batch, 1, kSignalLength})));
  for (const auto& b : blocks_) h = b(h);
  return head_(ad::mean_last(h));
}

template <class Real>
std::vector<NamedParam<Real>> Classifier<Real>::named_parameters() const {
  std::vector<NamedParam<Real>> out;
  push(out, stem_.weight);
  push(out, stem_.bias);
  for (const auto& b : blocks_) {
    for (const auto* l : {&b.conv1, &b.conv2, &b.shortcut}) {
      push(out, l->weight);
      push(out, l->bias);
    }
  }
  push(out, head_.weight);
  push(out, head_.bias);
  return out;
}

template <class Real>
Classifier<Real> Classifier<Real>::clone() const {
  Classifier copy = *this;
  copy.stem_.weight = deep_copy(stem_.weight);
  copy.stem_.bias = deep_copy(stem_.bias);
  for (auto& b : copy.blocks_)
    for (auto* l : {&b.conv1, &b.conv2, &b.shortcut}) {
      l->weight = deep_copy(l->weight);
      l->bias = deep_copy(l->bias);
    }
  copy.head_ = {deep_copy(head_.weight), deep_copy(head_.bias)};
  return copy;
}

template class Generator<float>;
template class Generator<double>;
template class Discriminator<float>;
template class Discriminator<double>;
template struct ResidualBlock<float>;
template struct ResidualBlock<double>;
template class Classifier<float>;
template class Classifier<double>;
template ParamValues<float> snapshot<float>(const std::vector<NamedParam<float>>&);
template ParamValues<double> snapshot<double>(const std::vector<NamedParam<double>>&);
template void restore<float>(const std::vector<NamedParam<float>>&, const ParamValues<float>&);
template void restore<double>(const std::vector<NamedParam<double>>&, const ParamValues<double>&);
template std::vector<Var<float>> vars_of<float>(const std::vector<NamedParam<float>>&);
template std::vector<Var<double>> vars_of<double>(const std::vector<NamedParam<double>>&);

}  // namespace lsmgan::nn
