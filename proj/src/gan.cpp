#include "lsmgan/gan.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "lsmgan/ad/adam.hpp"
#include "lsmgan/ad/ops.hpp"
#include "lsmgan/error.hpp"
#include "lsmgan/rng.hpp"

namespace lsmgan::gan {

std::string_view to_string(GanLossKind kind) {
  switch (kind) {
    case GanLossKind::Vanilla: return "Vanilla";
    case GanLossKind::LeastSquaresAdv: return "LeastSquaresAdv";
    case GanLossKind::Wasserstein: return "Wasserstein";
    case GanLossKind::Lsm: return "Lsm";
  }
  return "?";
}

GanLossKind parse_loss_kind(std::string_view text) {
  for (auto k : {GanLossKind::Vanilla, GanLossKind::LeastSquaresAdv, GanLossKind::Wasserstein,
                 GanLossKind::Lsm})
    if (to_string(k) == text) return k;
  throw Error(ErrorCode::ConfigError, "unknown loss kind '" + std::string(text) + "'");
}

std::string_view to_string(AggregationFn f) { return f == AggregationFn::Max ? "Max" : "Mean"; }

AggregationFn parse_aggregation(std::string_view text) {
  if (text == "Mean") return AggregationFn::Mean;
  if (text == "Max") return AggregationFn::Max;
  throw Error(ErrorCode::ConfigError, "unknown aggregation '" + std::string(text) + "'");
}

std::string_view to_string(SpectrumScale s) { return s == SpectrumScale::Linear ? "Linear" : "Log"; }

SpectrumScale parse_spectrum_scale(std::string_view text) {
  if (text == "Linear") return SpectrumScale::Linear;
  if (text == "Log") return SpectrumScale::Log;
  throw Error(ErrorCode::ConfigError, "unknown spectrum scale '" + std::string(text) + "'");
}

void validate(const LsmHyperParams& hp) {
  if (!std::isfinite(hp.lambda1) || !std::isfinite(hp.lambda2) || hp.lambda1 < 0 ||
      hp.lambda2 < 0)
    throw Error(ErrorCode::InvalidConfig, "lambda weights must be finite and nonnegative");
}

void validate(const TrainSchedule& s) {
  if (s.batch_size < 2) throw Error(ErrorCode::InvalidConfig, "batch_size must be >= 2");
  if (s.early_stop_patience < 1) throw Error(ErrorCode::InvalidConfig, "patience must be >= 1");
  if (!(s.lr > 0) || s.lr_decay_per_epoch < 0 || !(s.min_lr > 0))
    throw Error(ErrorCode::InvalidConfig, "learning-rate schedule must be positive");
  if (s.critic_steps < 1 || !(s.clip > 0))
    throw Error(ErrorCode::InvalidConfig, "critic_steps and clip must be positive");
  if (s.n_blocks < 2 || nn::kSignalLength % s.n_blocks != 0)
    throw Error(ErrorCode::IndivisibleBlockCount, "n_blocks must divide 1200 and be >= 2");
}

double epoch_lr(const TrainSchedule& s, std::size_t epoch_index) {
  return std::max(s.lr / (1.0 + s.lr_decay_per_epoch * static_cast<double>(epoch_index)), s.min_lr);
}

GanRecipe recipe_for(AugmentMethod method) {
  switch (method) {
    case AugmentMethod::Dcgan100: return {GeneratorKind::Conventional100, GanLossKind::Vanilla};
    case AugmentMethod::Dcgan1200: return {GeneratorKind::SameLength1200, GanLossKind::Vanilla};
    case AugmentMethod::Wdcgan100:
      return {GeneratorKind::Conventional100, GanLossKind::Wasserstein};
    case AugmentMethod::Wdcgan1200:
      return {GeneratorKind::SameLength1200, GanLossKind::Wasserstein};
    case AugmentMethod::LsmGan: return {GeneratorKind::SameLength1200, GanLossKind::Lsm};
    default: break;
  }
  throw Error(ErrorCode::InvalidConfig,
              "method " + std::string(lsmgan::to_string(method)) + " has no generator");
}

// ---------------------------------------------------------------- losses

template <class Real>
Var<Real> adv_loss_g(const Var<Real>& d_fake) {
  return ad::mean(ad::square(ad::affine(d_fake, Real(-1), Real(1))));
}

namespace {

template <class Real>
Var<Real> per_signal(const Var<Real>& values, AggregationFn f) {
  return f == AggregationFn::Max ? ad::max_last(values) : ad::mean_last(values);
}

template <class Real>
Var<Real> block_spectra(const Var<Real>& signals, std::size_t n_blocks, SpectrumScale scale) {
  return ad::spectral_magnitude(ad::slice_blocks(signals, n_blocks), scale);
}

template <class Real>
void check_unit_interval(const Var<Real>& v, const char* what) {
  for (Real x : v->value)
    if (!(x >= Real(0) && x <= Real(1)))
      throw Error(ErrorCode::DomainError,
                  std::string(what) + " outside [0, 1]: " + std::to_string(double(x)));
}

}  // namespace

template <class Real>
Var<Real> matching_term(const Var<Real>& real, const Var<Real>& fake, AggregationFn f,
                        std::size_t n_blocks, SpectrumScale scale) {
  if (real->shape != fake->shape || real->shape.size() != 2)
    throw Error(ErrorCode::BatchMismatch, "real " + ad::shape_string(real->shape) + " vs fake " +
                                              ad::shape_string(fake->shape));
  auto diff = ad::sub(block_spectra(fake, n_blocks, scale), block_spectra(real, n_blocks, scale));
  return ad::mean(per_signal(ad::l2_squared(diff), f));
}

template <class Real>
Var<Real> self_consistency_term(const Var<Real>& fake, AggregationFn f, std::size_t n_blocks,
                                SpectrumScale scale) {
  auto pairs = ad::pair_differences(block_spectra(fake, n_blocks, scale));
  return ad::mean(per_signal(ad::l2_squared(pairs), f));
}

template <class Real>
Var<Real> lsm_loss(const Var<Real>& real, const Var<Real>& fake, const Var<Real>& d_fake,
                   const LsmHyperParams& hp, std::size_t n_blocks, SpectrumScale scale) {
  validate(hp);
  if (real->shape != fake->shape || d_fake->shape.size() != 1 || fake->shape.empty() ||
      d_fake->shape[0] != fake->shape[0])
    throw Error(ErrorCode::BatchMismatch, "real " + ad::shape_string(real->shape) + ", fake " +
                                              ad::shape_string(fake->shape) + ", scores " +
                                              ad::shape_string(d_fake->shape));
  Var<Real> loss = adv_loss_g(d_fake);
  if (hp.lambda1 != 0.0)
    loss = ad::add(loss, ad::scale(matching_term(real, fake, hp.f, n_blocks, scale),
                                   static_cast<Real>(hp.lambda1)));
  if (hp.lambda2 != 0.0)
    loss = ad::add(loss, ad::scale(self_consistency_term(fake, hp.f, n_blocks, scale),
                                   static_cast<Real>(hp.lambda2)));
  return loss;
}

template <class Real>
LossPair<Real> vanilla_losses(const Var<Real>& d_real, const Var<Real>& d_fake) {
  check_unit_interval(d_real, "D(x)");
  check_unit_interval(d_fake, "D(G(z))");
  const Real floor = Real(1e-7);
  auto log_real = ad::mean(ad::clamped_log(d_real, floor));
  auto log_not_fake = ad::mean(ad::clamped_log(ad::affine(d_fake, Real(-1), Real(1)), floor));
  auto d_loss = ad::scale(ad::add(log_real, log_not_fake), Real(-1));
  auto g_loss = ad::scale(ad::mean(ad::clamped_log(d_fake, floor)), Real(-1));
  return {d_loss, g_loss};
}

template <class Real>
Var<Real> least_squares_d_loss(const Var<Real>& d_real, const Var<Real>& d_fake) {
  return ad::add(ad::mean(ad::square(ad::affine(d_real, Real(1), Real(-1)))),
                 ad::mean(ad::square(d_fake)));
}

template <class Real>
LossPair<Real> wasserstein_losses(const Var<Real>& d_real, const Var<Real>& d_fake) {
  auto fake_mean = ad::mean(d_fake);
  auto d_loss = ad::sub(fake_mean, ad::mean(d_real));
  auto g_loss = ad::scale(fake_mean, Real(-1));
  return {d_loss, g_loss};
}

#define LSMGAN_INSTANTIATE_LOSSES(Real)                                                        \
  template Var<Real> adv_loss_g<Real>(const Var<Real>&);                                       \
  template Var<Real> matching_term<Real>(const Var<Real>&, const Var<Real>&, AggregationFn,    \
                                         std::size_t, SpectrumScale);                          \
  template Var<Real> self_consistency_term<Real>(const Var<Real>&, AggregationFn, std::size_t, \
                                                 SpectrumScale);                               \
  template Var<Real> lsm_loss<Real>(const Var<Real>&, const Var<Real>&, const Var<Real>&,      \
                                    const LsmHyperParams&, std::size_t, SpectrumScale);        \
  template LossPair<Real> vanilla_losses<Real>(const Var<Real>&, const Var<Real>&);            \
  template Var<Real> least_squares_d_loss<Real>(const Var<Real>&, const Var<Real>&);           \
  template LossPair<Real> wasserstein_losses<Real>(const Var<Real>&, const Var<Real>&);

LSMGAN_INSTANTIATE_LOSSES(float)
LSMGAN_INSTANTIATE_LOSSES(double)
#undef LSMGAN_INSTANTIATE_LOSSES

// -------------------------------------------------------------- training

namespace {

using FVar = Var<float>;

FVar stack_records(const std::vector<dsp::Record>& records, std::span<const std::size_t> idx) {
  std::vector<float> data(idx.size() * nn::kSignalLength);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto& s = records[idx[i]].samples;
    std::transform(s.begin(), s.end(), data.begin() + i * nn::kSignalLength,
                   [](double v) { return static_cast<float>(v); });
  }
  return ad::constant<float>({idx.size(), nn::kSignalLength}, std::move(data));
}

FVar draw_noise(std::size_t batch, std::size_t length, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> z(batch * length);
  for (auto& v : z) v = static_cast<float>(rng.normal());
  return ad::constant<float>({batch, length}, std::move(z));
}

float scalar(const FVar& v) { return v->value.at(0); }

// Generator objective for one batch; shared by training and validation.
FVar generator_loss(GanLossKind loss, const FVar& real, const FVar& fake, const FVar& d_fake,
                    const LsmHyperParams& hp, const TrainSchedule& s) {
  switch (loss) {
    case GanLossKind::Vanilla: return vanilla_losses(d_fake, d_fake).g_loss;
    case GanLossKind::LeastSquaresAdv: return adv_loss_g(d_fake);
    case GanLossKind::Wasserstein: return ad::scale(ad::mean(d_fake), -1.0f);
    case GanLossKind::Lsm: return lsm_loss(real, fake, d_fake, hp, s.n_blocks, s.scale);
  }
  return nullptr;
}

FVar discriminator_loss(GanLossKind loss, const FVar& d_real, const FVar& d_fake) {
  switch (loss) {
    case GanLossKind::Vanilla: return vanilla_losses(d_real, d_fake).d_loss;
    case GanLossKind::Wasserstein: return wasserstein_losses(d_real, d_fake).d_loss;
    default: return least_squares_d_loss(d_real, d_fake);
  }
}

double mean_matching_distance(const FVar& real, const FVar& fake, const TrainSchedule& s) {
  const std::size_t batch = real->shape[0];
  double total = 0.0;
  std::vector<double> a(nn::kSignalLength), b(nn::kSignalLength);
  for (std::size_t i = 0; i < batch; ++i) {
    const float* r = real->value.data() + i * nn::kSignalLength;
    const float* f = fake->value.data() + i * nn::kSignalLength;
    std::copy(r, r + nn::kSignalLength, a.begin());
    std::copy(f, f + nn::kSignalLength, b.begin());
    auto ra = spectral::split_blocks(a, s.n_blocks);
    auto fb = spectral::split_blocks(b, s.n_blocks);
    double sum = 0.0;
    for (std::size_t k = 0; k < s.n_blocks; ++k)
      sum += spectral::matching_distance(ra[k], fb[k], s.scale);
    total += sum / static_cast<double>(s.n_blocks);
  }
  return total / static_cast<double>(batch);
}

enum Stream : std::uint64_t {
  kGeneratorInit = 1,
  kDiscriminatorInit,
  kSplit,
  kValidationNoise,
  kShuffle,
  kNoise,
};

}  // namespace

TrainResult train_gan(const std::vector<dsp::Record>& records, GeneratorKind kind,
                      GanLossKind loss, const std::optional<LsmHyperParams>& hp_opt,
                      const TrainSchedule& s) {
  validate(s);
  if (loss == GanLossKind::Lsm && !hp_opt)
    throw Error(ErrorCode::InvalidConfig, "Lsm loss requires hyperparameters");
  const LsmHyperParams hp = hp_opt.value_or(LsmHyperParams{});
  validate(hp);
  if (records.size() < 2 * s.batch_size)
    throw Error(ErrorCode::InsufficientData,
                std::to_string(records.size()) + " records, need >= " +
                    std::to_string(2 * s.batch_size));
  for (const auto& r : records)
    if (r.samples.size() != nn::kSignalLength)
      throw Error(ErrorCode::ShapeMismatch, "records must have 1200 samples");

  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng(derive_seed(s.seed, kSplit));
  split_rng.shuffle(std::span<std::size_t>(order));
  const std::size_t n_val = std::max<std::size_t>(1, records.size() / 10);
  std::vector<std::size_t> val_idx(order.begin(), order.begin() + n_val);
  std::vector<std::size_t> train_idx(order.begin() + n_val, order.end());
  val_idx.resize(std::min(val_idx.size(), s.batch_size));

  const auto head = loss == GanLossKind::Wasserstein ? nn::DiscriminatorHead::Raw
                                                     : nn::DiscriminatorHead::Sigmoid;
  nn::Generator<float> gen(kind, derive_seed(s.seed, kGeneratorInit));
  nn::Discriminator<float> disc(derive_seed(s.seed, kDiscriminatorInit), head);
  const auto g_params = gen.parameters();
  const auto d_params = disc.parameters();
  ad::AdamState<float> g_opt, d_opt;

  const std::size_t nz = gen.noise_length();
  const FVar val_real = stack_records(records, val_idx);
  const FVar val_noise = draw_noise(val_idx.size(), nz, derive_seed(s.seed, kValidationNoise));
  const std::size_t batches = train_idx.size() / s.batch_size;

  TrainResult result{gen, {}, 0, false};
  double best = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  std::size_t critic_count = 0;
  std::uint64_t noise_stream = 0;

  for (std::size_t epoch = 0; epoch < s.max_epochs; ++epoch) {
    const double lr = epoch_lr(s, epoch);
    g_opt.lr = d_opt.lr = lr;
    Rng shuffle_rng(derive_seed(derive_seed(s.seed, kShuffle), epoch));
    shuffle_rng.shuffle(std::span<std::size_t>(train_idx));

    double d_sum = 0.0, g_sum = 0.0;
    std::size_t d_steps = 0, g_steps = 0;
    for (std::size_t bi = 0; bi < batches; ++bi) {
      std::span<const std::size_t> idx(train_idx.data() + bi * s.batch_size, s.batch_size);
      const FVar real = stack_records(records, idx);
      const FVar z = draw_noise(s.batch_size, nz, derive_seed(derive_seed(s.seed, kNoise), noise_stream++));
      const FVar fake = gen.forward(z);

      // Discriminator (critic) step on a detached fake.
      FVar d_loss = discriminator_loss(loss, disc.forward(real), disc.forward(ad::detach(fake)));
      ad::backward(d_loss);
      ad::adam_step<float>(d_params, d_opt);
      if (loss == GanLossKind::Wasserstein)
        ad::clip_values<float>(d_params, static_cast<float>(s.clip));
      d_sum += scalar(d_loss);
      ++d_steps;

      if (loss == GanLossKind::Wasserstein) {
        if (++critic_count % s.critic_steps != 0) continue;
        const FVar z2 = draw_noise(s.batch_size, nz, derive_seed(derive_seed(s.seed, kNoise), noise_stream++));
        FVar g_loss = ad::scale(ad::mean(disc.forward(gen.forward(z2))), -1.0f);
        ad::backward(g_loss);
        ad::zero_grad<float>(d_params);
        ad::adam_step<float>(g_params, g_opt);
        g_sum += scalar(g_loss);
        ++g_steps;
        continue;
      }

      FVar g_loss = generator_loss(loss, real, fake, disc.forward(fake), hp, s);
      ad::backward(g_loss);
      ad::zero_grad<float>(d_params);
      ad::adam_step<float>(g_params, g_opt);
      g_sum += scalar(g_loss);
      ++g_steps;
    }

    const FVar val_fake = ad::detach(gen.forward(val_noise));
    const FVar val_loss = generator_loss(loss, val_real, val_fake, disc.forward(val_fake), hp, s);
    EpochLog entry;
    entry.epoch = epoch + 1;
    entry.d_loss = d_steps ? d_sum / static_cast<double>(d_steps) : 0.0;
    entry.g_loss = g_steps ? g_sum / static_cast<double>(g_steps) : 0.0;
    entry.val_metric = scalar(val_loss);
    entry.val_matching = mean_matching_distance(val_real, val_fake, s);
    entry.lr = lr;
    result.log.push_back(entry);

    if (entry.val_metric < best) {
      best = entry.val_metric;
      result.best_epoch = entry.epoch;
      since_best = 0;
    } else if (++since_best >= s.early_stop_patience) {
      result.stopped_early = true;
      break;
    }
  }
  result.generator = gen;
  return result;
}

std::vector<std::vector<double>> sample(const nn::Generator<float>& generator, std::size_t n,
                                        std::uint64_t seed) {
  std::vector<std::vector<double>> out;
  out.reserve(n);
  constexpr std::size_t kChunk = 200;
  const std::size_t nz = generator.noise_length();
  for (std::size_t done = 0, chunk = 0; done < n; ++chunk) {
    const std::size_t b = std::min(kChunk, n - done);
    const FVar y = generator.forward(draw_noise(b, nz, derive_seed(seed, chunk)));
    for (std::size_t i = 0; i < b; ++i) {
      const float* p = y->value.data() + i * nn::kSignalLength;
      std::vector<double> sig(p, p + nn::kSignalLength);
      const auto [lo, hi] = std::minmax_element(sig.begin(), sig.end());
      if (*hi > *lo) {
        sig = dsp::minmax_normalize(sig);
      } else {
        // A collapsed output cannot be stretched; keep it inside [0, 1].
        for (auto& v : sig) v = std::clamp(v, 0.0, 1.0);
      }
      out.push_back(std::move(sig));
    }
    done += b;
  }
  return out;
}

std::string format_number(double value) {
  if (std::isnan(value)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  return buf;
}

void write_training_log(const std::filesystem::path& path, const std::vector<EpochLog>& log) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << "epoch,d_loss,g_loss,val_metric,val_matching,lr\n";
  for (const auto& e : log)
    out << e.epoch << ',' << format_number(e.d_loss) << ',' << format_number(e.g_loss) << ','
        << format_number(e.val_metric) << ',' << format_number(e.val_matching) << ','
        << format_number(e.lr) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

}  // namespace lsmgan::gan
