#include "lsmgan/ppgsim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lsmgan/error.hpp"
#include "lsmgan/rng.hpp"

namespace lsmgan {

std::string_view to_string(RhythmClass c) { return c == RhythmClass::AF ? "AF" : "NonAF"; }

RhythmClass parse_rhythm_class(std::string_view text) {
  if (text == "AF") return RhythmClass::AF;
  if (text == "NonAF") return RhythmClass::NonAF;
  throw Error(ErrorCode::ConfigError, "unknown rhythm class '" + std::string(text) + "'");
}

std::string_view to_string(AugmentMethod m) {
  switch (m) {
    case AugmentMethod::Original: return "Original";
    case AugmentMethod::DataCopying: return "DataCopying";
    case AugmentMethod::Permutation: return "Permutation";
    case AugmentMethod::Dcgan100: return "Dcgan100";
    case AugmentMethod::Dcgan1200: return "Dcgan1200";
    case AugmentMethod::Wdcgan100: return "Wdcgan100";
    case AugmentMethod::Wdcgan1200: return "Wdcgan1200";
    case AugmentMethod::LsmGan: return "LsmGan";
  }
  return "Unknown";
}

AugmentMethod parse_augment_method(std::string_view text) {
  for (AugmentMethod m : kAllAugmentMethods)
    if (to_string(m) == text) return m;
  throw Error(ErrorCode::ConfigError, "unknown augmentation method '" + std::string(text) + "'");
}

bool is_gan_method(AugmentMethod m) {
  return m == AugmentMethod::Dcgan100 || m == AugmentMethod::Dcgan1200 ||
         m == AugmentMethod::Wdcgan100 || m == AugmentMethod::Wdcgan1200 ||
         m == AugmentMethod::LsmGan;
}

}  // namespace lsmgan

namespace lsmgan::ppgsim {
namespace {

constexpr double kSystolicPhase = 0.12;   // fraction of the mean interval
constexpr double kSystolicWidth = 0.06;
constexpr double kDicroticPhase = 0.40;   // fraction of the beat's own interval
constexpr double kDicroticWidth = 0.08;
constexpr double kDicroticRatio = 0.35;

void add_gaussian(std::vector<double>& out, double rate, double center_s, double sigma_s,
                  double amplitude) {
  const double lo = (center_s - 4.0 * sigma_s) * rate;
  const double hi = (center_s + 4.0 * sigma_s) * rate;
  const auto n = static_cast<std::ptrdiff_t>(out.size());
  const std::ptrdiff_t first = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::ceil(lo)));
  const std::ptrdiff_t last = std::min<std::ptrdiff_t>(n - 1, static_cast<std::ptrdiff_t>(std::floor(hi)));
  const double inv = 1.0 / (2.0 * sigma_s * sigma_s);
  for (std::ptrdiff_t i = first; i <= last; ++i) {
    const double d = static_cast<double>(i) / rate - center_s;
    out[static_cast<std::size_t>(i)] += amplitude * std::exp(-d * d * inv);
  }
}

}  // namespace

SimConfig default_config(RhythmClass rhythm) {
  SimConfig c;
  c.rr_cv = rhythm == RhythmClass::AF ? 0.25 : 0.02;
  c.hr_spread_bpm = 8.0;
  return c;
}

void validate(const SimConfig& c, RhythmClass rhythm) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
  if (!(c.sample_rate_hz > 0.0) || !std::isfinite(c.sample_rate_hz)) fail("sample_rate_hz must be positive");
  if (!(c.duration_s > 0.0) || !std::isfinite(c.duration_s)) fail("duration_s must be positive");
  if (!(c.mean_hr_bpm >= 40.0 && c.mean_hr_bpm <= 180.0)) fail("mean_hr_bpm must lie in [40, 180]");
  if (!(c.hr_spread_bpm >= 0.0)) fail("hr_spread_bpm must be nonnegative");
  if (!(c.rr_cv >= 0.0)) fail("rr_cv must be nonnegative");
  if (!(c.noise_std >= 0.0)) fail("noise_std must be nonnegative");
  if (!(c.baseline_wander_amp >= 0.0)) fail("baseline_wander_amp must be nonnegative");
  if (rhythm == RhythmClass::AF && c.rr_cv < 0.15) fail("AF requires rr_cv >= 0.15");
  if (rhythm == RhythmClass::NonAF && c.rr_cv > 0.05) fail("NonAF requires rr_cv <= 0.05");
  const double n = c.duration_s * c.sample_rate_hz;
  if (std::abs(n - std::round(n)) > 1e-9 * std::max(1.0, n)) fail("duration_s * sample_rate_hz must be an integer");
}

RawSignal generate_record(RhythmClass rhythm, const SimConfig& c) {
  validate(c, rhythm);
  Rng rng(derive_seed(c.seed, static_cast<std::uint64_t>(rhythm)));
  const auto n = static_cast<std::size_t>(std::llround(c.duration_s * c.sample_rate_hz));
  RawSignal out{std::vector<double>(n, 0.0), c.sample_rate_hz};

  const double hr = std::clamp(c.mean_hr_bpm + c.hr_spread_bpm * rng.normal(), 40.0, 180.0);
  const double mean_rr = 60.0 / hr;
  // Lognormal intervals with exactly the requested coefficient of variation.
  const double sigma2 = std::log1p(c.rr_cv * c.rr_cv);
  const double sigma = std::sqrt(sigma2);
  const double mu = std::log(mean_rr) - 0.5 * sigma2;

  double t = -rng.uniform(0.0, mean_rr);
  double previous_rr = mean_rr;
  while (t < c.duration_s + mean_rr) {
    const double rr = std::clamp(std::exp(mu + sigma * rng.normal()), 0.25 * mean_rr, 3.0 * mean_rr);
    // Beats after a short interval eject less.
    const double amplitude = std::sqrt(previous_rr / mean_rr) * (1.0 + 0.05 * rng.normal());
    add_gaussian(out.samples, c.sample_rate_hz, t + kSystolicPhase * mean_rr,
                 kSystolicWidth * mean_rr, amplitude);
    add_gaussian(out.samples, c.sample_rate_hz, t + kDicroticPhase * rr, kDicroticWidth * mean_rr,
                 kDicroticRatio * amplitude);
    previous_rr = rr;
    t += rr;
  }

  const double wander_hz = rng.uniform(0.05, 0.4);
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  for (std::size_t i = 0; i < n; ++i) {
    const double ts = static_cast<double>(i) / c.sample_rate_hz;
    out.samples[i] += c.baseline_wander_amp * std::sin(2.0 * std::numbers::pi * wander_hz * ts + phase);
    out.samples[i] += c.noise_std * rng.normal();
  }
  return out;
}

std::vector<LabeledSignal> generate_corpus(std::size_t n_af, std::size_t n_nonaf,
                                           const SimConfig& config_af,
                                           const SimConfig& config_nonaf) {
  validate(config_af, RhythmClass::AF);
  validate(config_nonaf, RhythmClass::NonAF);
  std::vector<LabeledSignal> corpus;
  corpus.reserve(n_af + n_nonaf);
  auto emit = [&](RhythmClass rhythm, const SimConfig& base, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
      SimConfig c = base;
      c.seed = base.seed + i;
      corpus.push_back({generate_record(rhythm, c), rhythm, c.seed});
    }
  };
  emit(RhythmClass::AF, config_af, n_af);
  emit(RhythmClass::NonAF, config_nonaf, n_nonaf);
  return corpus;
}

}  // namespace lsmgan::ppgsim
