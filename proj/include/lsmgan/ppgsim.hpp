#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lsmgan/types.hpp"

namespace lsmgan::ppgsim {

struct SimConfig {
  std::uint64_t seed = 0;
  double sample_rate_hz = 240.0;
  double duration_s = 30.0;
  double mean_hr_bpm = 80.0;
  /// Per-record standard deviation of the heart rate around mean_hr_bpm.
  double hr_spread_bpm = 0.0;
  double rr_cv = 0.02;
  double noise_std = 0.03;
  double baseline_wander_amp = 0.1;
};

/// Defaults per class: AF rr_cv 0.25, NonAF rr_cv 0.02.
SimConfig default_config(RhythmClass rhythm);

/// Throws Error(InvalidConfig) when the configuration is not usable for the class.
void validate(const SimConfig& config, RhythmClass rhythm);

struct RawSignal {
  std::vector<double> samples;
  double sample_rate_hz = 0.0;
};

/// Sum of two-Gaussian pulse templates at lognormally distributed
/// inter-pulse intervals, plus white noise and a slow baseline sinusoid.
RawSignal generate_record(RhythmClass rhythm, const SimConfig& config);

struct LabeledSignal {
  RawSignal signal;
  RhythmClass label = RhythmClass::NonAF;
  std::uint64_t seed = 0;
};

/// AF records first (seeds config_af.seed + i), then NonAF records
/// (seeds config_nonaf.seed + i).
std::vector<LabeledSignal> generate_corpus(std::size_t n_af, std::size_t n_nonaf,
                                           const SimConfig& config_af,
                                           const SimConfig& config_nonaf);

}  // namespace lsmgan::ppgsim
