#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lsmgan/ppgsim.hpp"
#include "lsmgan/types.hpp"

namespace lsmgan::dsp {

inline constexpr std::size_t kRecordLength = 1200;
inline constexpr double kRecordRateHz = 40.0;

/// One fixed-length, normalized, labeled segment: the classification unit.
struct Record {
  std::vector<double> samples;
  double sample_rate_hz = kRecordRateHz;
  RhythmClass label = RhythmClass::NonAF;
  double artifact_fraction = 0.0;
  AugmentMethod origin = AugmentMethod::Original;
};

using ppgsim::RawSignal;

struct FirFilter {
  std::vector<double> taps;
  double pass_lo_hz = 0.0;
  double pass_hi_hz = 0.0;
  double sample_rate_hz = 0.0;
};

/// Hamming-windowed sinc low-pass with unit DC gain. taps must be odd.
FirFilter design_lowpass(double cutoff_hz, double sample_rate_hz, std::size_t taps);

/// 81-tap Hamming band-pass for the 0.9-5 Hz pulse band at 40 Hz.
FirFilter design_bandpass();
FirFilter design_bandpass(double pass_lo_hz, double pass_hi_hz, double sample_rate_hz,
                          std::size_t taps);

std::complex<double> frequency_response(const FirFilter& filter, double freq_hz);

/// Zero-padded convolution, output aligned with the input (group delay removed).
RawSignal apply_fir(const RawSignal& x, const FirFilter& filter);

/// Anti-alias low-pass at 0.8 of the new Nyquist rate, then keep every
/// factor-th sample.
RawSignal decimate(const RawSignal& x, std::size_t factor);

std::vector<double> minmax_normalize(std::span<const double> x);

/// Non-overlapping consecutive segments; a trailing remainder is dropped.
std::vector<std::vector<double>> segment(std::span<const double> x, std::size_t seg_len);

/// Replaces a contiguous run of round(fraction * length) samples with a
/// random walk clipped to [0, 1].
Record inject_artifact(const Record& record, double fraction, std::uint64_t seed);

/// 240 Hz raw signal -> decimate by 6 -> band-pass -> 1200-sample segments,
/// each min-max normalized.
std::vector<Record> preprocess(const RawSignal& raw, RhythmClass label);

}  // namespace lsmgan::dsp
