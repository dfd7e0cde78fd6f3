#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "lsmgan/ad/adam.hpp"
#include "lsmgan/ad/ops.hpp"
#include "lsmgan/dsp.hpp"
#include "lsmgan/error.hpp"
#include "lsmgan/gan.hpp"
#include "lsmgan/nn.hpp"
#include "lsmgan/rng.hpp"
#include "lsmgan/spectral.hpp"

using namespace lsmgan;
using gan::GanLossKind;
using nn::GeneratorKind;

namespace {

template <class Real>
ad::Var<Real> random_input(Rng& rng, ad::Shape shape, double lo = -1.0, double hi = 1.0) {
  std::vector<Real> v(ad::numel(shape));
  for (auto& x : v) x = static_cast<Real>(rng.uniform(lo, hi));
  return ad::constant<Real>(std::move(shape), std::move(v));
}

template <class Real>
bool same_values(const std::vector<ad::NamedParam<Real>>& a, const std::vector<ad::NamedParam<Real>>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].var->value != b[i].var->value) return false;
  return true;
}

ad::Var<double> scores(std::vector<double> v) {
  const std::size_t n = v.size();
  return ad::constant<double>({n}, std::move(v));
}

double value(const ad::Var<double>& v) { return v->value.at(0); }

template <class F>
void expect_code(ErrorCode code, F&& f) {
  try {
    f();
    FAIL("expected " << to_string(code));
  } catch (const Error& e) {
    CHECK(e.code() == code);
  }
}

std::vector<dsp::Record> toy_records(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<dsp::Record> out(n);
  for (auto& r : out) {
    r.samples.resize(dsp::kRecordLength);
    const double phase = rng.uniform(0.0, 6.28);
    for (std::size_t t = 0; t < r.samples.size(); ++t)
      r.samples[t] = 0.5 + 0.4 * std::sin(0.2 * double(t) + phase) + 0.05 * rng.uniform();
    r.label = RhythmClass::AF;
  }
  return out;
}

}  // namespace

TEST_CASE("generator output shapes") {
  Rng rng(1);
  nn::Generator<float> conv(GeneratorKind::Conventional100, 3);
  CHECK(conv.noise_length() == 100);
  CHECK(conv.forward(random_input<float>(rng, {2, 100}))->shape == ad::Shape{2, 1200});
  nn::Generator<float> same(GeneratorKind::SameLength1200, 3);
  CHECK(same.noise_length() == 1200);
  const auto y = same.forward(random_input<float>(rng, {2, 1200}));
  CHECK(y->shape == ad::Shape{2, 1200});
  for (float v : y->value) CHECK((v > 0.0f && v < 1.0f));
  CHECK(ad::count_ops(y, "transposed_conv1d") == 0);
  CHECK(ad::count_ops(y, "dense") == 0);
  const auto yc = conv.forward(random_input<float>(rng, {1, 100}));
  CHECK(ad::count_ops(yc, "transposed_conv1d") == 3);
  for (float v : yc->value) CHECK((v >= 0.0f && v <= 1.0f));
}

TEST_CASE("initialisation is a function of the seed") {
  for (auto kind : {GeneratorKind::Conventional100, GeneratorKind::SameLength1200}) {
    CHECK(same_values(nn::Generator<float>(kind, 5).named_parameters(),
                      nn::Generator<float>(kind, 5).named_parameters()));
    CHECK_FALSE(same_values(nn::Generator<float>(kind, 5).named_parameters(),
                            nn::Generator<float>(kind, 6).named_parameters()));
  }
  CHECK(same_values(nn::Discriminator<float>(9, nn::DiscriminatorHead::Sigmoid).named_parameters(),
                    nn::Discriminator<float>(9, nn::DiscriminatorHead::Sigmoid).named_parameters()));
  CHECK(same_values(nn::Classifier<float>(4).named_parameters(), nn::Classifier<float>(4).named_parameters()));
}

TEST_CASE("discriminator heads") {
  Rng rng(2);
  const auto x = random_input<float>(rng, {3, 1200}, 0.0, 1.0);
  const auto sig = nn::Discriminator<float>(1, nn::DiscriminatorHead::Sigmoid).forward(x);
  CHECK(sig->shape == ad::Shape{3});
  for (float v : sig->value) CHECK((v > 0.0f && v < 1.0f));
  const auto raw = nn::Discriminator<float>(1, nn::DiscriminatorHead::Raw).forward(x);
  CHECK(raw->shape == ad::Shape{3});
  CHECK(ad::count_ops(raw, "conv1d") == 4);
}

TEST_CASE("classifier logits and residual identity") {
  Rng rng(3);
  nn::Classifier<double> clf(8);
  CHECK(clf.forward(random_input<double>(rng, {2, 1200}, 0.0, 1.0))->shape == ad::Shape{2, 2});

  for (auto& block : clf.blocks()) {
    if (block.shortcut.weight) continue;
    for (auto* conv : {&block.conv1, &block.conv2}) {
      std::fill(conv->weight->value.begin(), conv->weight->value.end(), 0.0);
      std::fill(conv->bias->value.begin(), conv->bias->value.end(), 0.0);
    }
    const auto x = random_input<double>(rng, {2, block.conv1.weight->shape[1], 50}, 0.0, 1.0);
    CHECK(block(x)->value == x->value);
  }
}

TEST_CASE("adversarial generator loss") {
  CHECK(value(gan::adv_loss_g(scores({1, 1, 1}))) == 0.0);
  CHECK(value(gan::adv_loss_g(scores({0, 0}))) == 1.0);
  CHECK(value(gan::adv_loss_g(scores({0.5, 1.0}))) == doctest::Approx(0.125).epsilon(1e-15));
}

TEST_CASE("lsm_loss reduces to the adversarial loss when both weights are zero") {
  Rng rng(4);
  const auto real = random_input<double>(rng, {2, 1200}, 0.0, 1.0);
  const auto fake = random_input<double>(rng, {2, 1200}, 0.0, 1.0);
  const auto d_fake = scores({0.3, 0.8});
  const auto plain = gan::adv_loss_g(d_fake);
  for (auto f : {spectral::AggregationFn::Mean, spectral::AggregationFn::Max}) {
    const auto lsm = gan::lsm_loss(real, fake, d_fake, gan::LsmHyperParams{0, 0, f}, 5, spectral::SpectrumScale::Log);
    CHECK(value(lsm) == value(plain));
  }
  // Matching term vanishes when fake equals real.
  const auto m = gan::matching_term(real, real, spectral::AggregationFn::Max, 5, spectral::SpectrumScale::Log);
  CHECK(value(m) == 0.0);
  expect_code(ErrorCode::BatchMismatch, [&] {
    gan::lsm_loss(real, random_input<double>(rng, {3, 1200}), scores({0.3, 0.8, 0.1}),
                  gan::LsmHyperParams{1, 1, spectral::AggregationFn::Mean}, 5, spectral::SpectrumScale::Log);
  });
}

TEST_CASE("lsm_loss equals the composition of spectral-module distances") {
  Rng rng(5);
  const std::size_t n_blocks = 5;
  for (auto scale : {spectral::SpectrumScale::Log, spectral::SpectrumScale::Linear}) {
    const auto real = random_input<double>(rng, {2, 1200}, 0.0, 1.0);
    const auto fake = random_input<double>(rng, {2, 1200}, 0.0, 1.0);
    const auto d_fake = scores({0.25, 0.6});
    const gan::LsmHyperParams hp{1.5, 1.5, spectral::AggregationFn::Mean};

    double matching = 0, self = 0;
    for (std::size_t b = 0; b < 2; ++b) {
      const std::vector<double> r(real->value.begin() + b * 1200, real->value.begin() + (b + 1) * 1200);
      const std::vector<double> f(fake->value.begin() + b * 1200, fake->value.begin() + (b + 1) * 1200);
      const auto rb = spectral::split_blocks(r, n_blocks);
      const auto fb = spectral::split_blocks(f, n_blocks);
      std::vector<double> d;
      for (std::size_t i = 0; i < n_blocks; ++i) d.push_back(spectral::matching_distance(rb[i], fb[i], scale));
      matching += spectral::aggregate(hp.f, d);
      self += spectral::aggregate(hp.f, spectral::self_consistency_distances(fb, scale));
    }
    const double adv = (0.75 * 0.75 + 0.4 * 0.4) / 2.0;
    const double want = adv + 1.5 * matching / 2.0 + 1.5 * self / 2.0;
    const double got = value(gan::lsm_loss(real, fake, d_fake, hp, n_blocks, scale));
    CHECK(got == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("vanilla losses") {
  const auto half = gan::vanilla_losses(scores({0.5, 0.5}), scores({0.5, 0.5}));
  CHECK(value(half.d_loss) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
  const auto near_one = gan::vanilla_losses(scores({0.5}), scores({1.0 - 1e-9}));
  CHECK(value(near_one.g_loss) < 1e-6);
  const auto clamped = gan::vanilla_losses(scores({0.0, 1.0}), scores({1.0, 0.0}));
  CHECK(std::isfinite(value(clamped.d_loss)));
  CHECK(std::isfinite(value(clamped.g_loss)));
  expect_code(ErrorCode::DomainError, [] { gan::vanilla_losses(scores({1.5}), scores({0.5})); });
  CHECK(value(gan::least_squares_d_loss(scores({1, 1}), scores({0, 0}))) == 0.0);
}

TEST_CASE("Wasserstein losses and critic clipping") {
  const auto w = gan::wasserstein_losses(scores({1, 1}), scores({0, 0}));
  CHECK(value(w.d_loss) == -1.0);
  CHECK(value(w.g_loss) == 0.0);

  nn::Discriminator<float> critic(2, nn::DiscriminatorHead::Raw);
  const auto params = critic.parameters();
  for (const auto& p : params) std::fill(p->value.begin(), p->value.end(), 0.02f);
  ad::clip_values<float>(params, 0.01f);
  for (const auto& p : params)
    for (float v : p->value) CHECK(v == 0.01f);
}

TEST_CASE("training schedule defaults and learning-rate decay") {
  const gan::TrainSchedule s;
  CHECK(s.batch_size == 200);
  CHECK(s.lr == 0.001);
  CHECK(s.lr_decay_per_epoch == 0.0001);
  CHECK(s.early_stop_patience == 6);
  CHECK(gan::epoch_lr(s, 0) == 0.001);
  CHECK(gan::epoch_lr(s, 10) == doctest::Approx(0.001 / 1.001).epsilon(1e-15));
  gan::TrainSchedule fast = s;
  fast.lr_decay_per_epoch = 1.0;
  CHECK(gan::epoch_lr(fast, 1000) == fast.min_lr);
  for (std::size_t e = 1; e < 50; ++e) CHECK(gan::epoch_lr(fast, e) <= gan::epoch_lr(fast, e - 1));
}

TEST_CASE("method recipes") {
  CHECK(gan::recipe_for(AugmentMethod::Dcgan100).kind == GeneratorKind::Conventional100);
  CHECK(gan::recipe_for(AugmentMethod::Dcgan1200).kind == GeneratorKind::SameLength1200);
  CHECK(gan::recipe_for(AugmentMethod::Wdcgan100).loss == GanLossKind::Wasserstein);
  CHECK(gan::recipe_for(AugmentMethod::Wdcgan1200).kind == GeneratorKind::SameLength1200);
  CHECK(gan::recipe_for(AugmentMethod::LsmGan).loss == GanLossKind::Lsm);
  CHECK(gan::recipe_for(AugmentMethod::LsmGan).kind == GeneratorKind::SameLength1200);
}

TEST_CASE("train_gan on a toy corpus") {
  gan::TrainSchedule s;
  s.batch_size = 4;
  s.max_epochs = 2;
  s.seed = 11;
  const auto recs = toy_records(20, 1);
  const gan::LsmHyperParams hp{1.5, 1.5, spectral::AggregationFn::Mean};
  const auto a = gan::train_gan(recs, GeneratorKind::Conventional100, GanLossKind::Lsm, hp, s);
  CHECK(a.log.size() == 2);
  CHECK(a.log[0].epoch == 1);
  for (const auto& e : a.log) {
    CHECK(std::isfinite(e.d_loss));
    CHECK(std::isfinite(e.g_loss));
    CHECK(std::isfinite(e.val_matching));
  }
  const auto b = gan::train_gan(recs, GeneratorKind::Conventional100, GanLossKind::Lsm, hp, s);
  CHECK(same_values(a.generator.named_parameters(), b.generator.named_parameters()));

  const auto w = gan::train_gan(recs, GeneratorKind::SameLength1200, GanLossKind::Wasserstein, std::nullopt, s);
  CHECK(w.log.size() == 2);

  expect_code(ErrorCode::InsufficientData, [&] {
    gan::train_gan(toy_records(7, 2), GeneratorKind::Conventional100, GanLossKind::Vanilla, std::nullopt, s);
  });
}

TEST_CASE("sample") {
  nn::Generator<float> g(GeneratorKind::Conventional100, 1);
  CHECK(gan::sample(g, 0, 3).empty());
  const auto a = gan::sample(g, 5, 3);
  REQUIRE(a.size() == 5);
  for (const auto& s : a) {
    CHECK(s.size() == 1200);
    for (double v : s) CHECK((v >= 0.0 && v <= 1.0));
  }
  CHECK(gan::sample(g, 5, 3) == a);
  CHECK(gan::sample(g, 5, 4) != a);
}

TEST_CASE("format_number") {
  CHECK(gan::format_number(0.125) == "0.125");
  CHECK(gan::format_number(1234567.0) == "1.23457e+06");
}
