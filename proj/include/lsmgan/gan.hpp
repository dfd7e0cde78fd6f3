#pragma once

// Loss regimes and the adversarial training loop.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lsmgan/ad/graph.hpp"
#include "lsmgan/dsp.hpp"
#include "lsmgan/nn.hpp"
#include "lsmgan/spectral.hpp"
#include "lsmgan/types.hpp"

namespace lsmgan::gan {

using ad::Var;
using nn::GeneratorKind;
using spectral::AggregationFn;
using spectral::SpectrumScale;

enum class GanLossKind { Vanilla, LeastSquaresAdv, Wasserstein, Lsm };

std::string_view to_string(GanLossKind kind);
GanLossKind parse_loss_kind(std::string_view text);

struct LsmHyperParams {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  AggregationFn f = AggregationFn::Mean;
};

void validate(const LsmHyperParams& hp);
std::string_view to_string(AggregationFn f);
AggregationFn parse_aggregation(std::string_view text);
std::string_view to_string(SpectrumScale s);
SpectrumScale parse_spectrum_scale(std::string_view text);

struct TrainSchedule {
  std::size_t batch_size = 200;
  double lr = 1e-3;
  double lr_decay_per_epoch = 1e-4;
  double min_lr = 1e-5;
  std::size_t max_epochs = 100;
  std::size_t early_stop_patience = 6;
  std::uint64_t seed = 0;
  std::size_t n_blocks = spectral::kDefaultBlocks;
  SpectrumScale scale = SpectrumScale::Log;
  std::size_t critic_steps = 5;
  double clip = 0.01;
};

void validate(const TrainSchedule& sched);

/// Inverse-time decay, lr / (1 + decay * epoch_index), floored at min_lr.
double epoch_lr(const TrainSchedule& sched, std::size_t epoch_index);

/// Which generator and objective each GAN augmentation method uses.
struct GanRecipe {
  GeneratorKind kind;
  GanLossKind loss;
};
GanRecipe recipe_for(AugmentMethod method);

// Losses. Discriminator outputs are [B] nodes; signals are [B, 1200].

/// mean((1 - D(G(z)))^2)
template <class Real>
Var<Real> adv_loss_g(const Var<Real>& d_fake);

/// mean over the batch of F over blocks of the squared periodogram distance
/// between index-paired real and fake blocks.
template <class Real>
Var<Real> matching_term(const Var<Real>& real, const Var<Real>& fake, AggregationFn f,
                        std::size_t n_blocks, SpectrumScale scale);

/// mean over the batch of F over block pairs i < j within each fake signal.
template <class Real>
Var<Real> self_consistency_term(const Var<Real>& fake, AggregationFn f, std::size_t n_blocks,
                                SpectrumScale scale);

/// adv_loss_g + lambda1 * matching + lambda2 * self-consistency. A term with
/// a zero weight is not built, so (0, 0) returns adv_loss_g itself.
/// Throws BatchMismatch when real and fake differ in shape.
template <class Real>
Var<Real> lsm_loss(const Var<Real>& real, const Var<Real>& fake, const Var<Real>& d_fake,
                   const LsmHyperParams& hp, std::size_t n_blocks, SpectrumScale scale);

template <class Real>
struct LossPair {
  Var<Real> d_loss;
  Var<Real> g_loss;
};

/// Discriminator log loss and the non-saturating generator loss. Inputs are
/// clamped at 1e-7 inside the logs; values outside [0, 1] raise DomainError.
template <class Real>
LossPair<Real> vanilla_losses(const Var<Real>& d_real, const Var<Real>& d_fake);

/// mean((D(x) - 1)^2) + mean(D(G(z))^2)
template <class Real>
Var<Real> least_squares_d_loss(const Var<Real>& d_real, const Var<Real>& d_fake);

/// d_loss = -mean(D(x)) + mean(D(G(z))), g_loss = -mean(D(G(z))).
template <class Real>
LossPair<Real> wasserstein_losses(const Var<Real>& d_real, const Var<Real>& d_fake);

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double d_loss = 0.0;    // mean over the epoch's discriminator steps
  double g_loss = 0.0;    // mean over the epoch's generator steps
  double val_metric = 0.0;    // validation generator loss (early-stopping monitor)
  double val_matching = 0.0;  // mean matching distance on the validation pairs
  double lr = 0.0;
};

struct TrainResult {
  nn::Generator<float> generator;
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  bool stopped_early = false;
};

/// Adversarial training on records of one class. Requires at least
/// 2 * batch_size records (InsufficientData otherwise); a seeded 10% of them
/// is held out for validation. Returns the generator as of the last epoch.
TrainResult train_gan(const std::vector<dsp::Record>& real_records, GeneratorKind kind,
                      GanLossKind loss, const std::optional<LsmHyperParams>& hp,
                      const TrainSchedule& sched);

/// n generated signals, each min-max normalized; deterministic in seed.
std::vector<std::vector<double>> sample(const nn::Generator<float>& generator, std::size_t n,
                                        std::uint64_t seed);

/// CSV: epoch,d_loss,g_loss,val_metric,val_matching,lr
void write_training_log(const std::filesystem::path& path, const std::vector<EpochLog>& log);

/// Stable 6-significant-digit rendering shared by every CSV writer.
std::string format_number(double value);

}  // namespace lsmgan::gan
