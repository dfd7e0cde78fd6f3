#include "lsmgan/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lsmgan/error.hpp"
#include "lsmgan/rng.hpp"
#include "lsmgan/simd/kernels.hpp"

namespace lsmgan::dsp {
namespace {

std::vector<double> windowed_sinc(double cutoff_hz, double rate, std::size_t taps) {
  const double fc = cutoff_hz / rate;
  const auto center = static_cast<double>(taps - 1) / 2.0;
  std::vector<double> h(taps);
  double sum = 0.0;
  for (std::size_t i = 0; i < taps; ++i) {
    const double n = static_cast<double>(i) - center;
    const double sinc = n == 0.0 ? 2.0 * fc : std::sin(2.0 * std::numbers::pi * fc * n) / (std::numbers::pi * n);
    const double window =
        0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(taps - 1));
    h[i] = sinc * window;
    sum += h[i];
  }
  for (double& v : h) v /= sum;
  // Enforce exact symmetry against rounding in sin().
  for (std::size_t i = 0; i < taps / 2; ++i) {
    const double m = 0.5 * (h[i] + h[taps - 1 - i]);
    h[i] = h[taps - 1 - i] = m;
  }
  return h;
}

}  // namespace

FirFilter design_lowpass(double cutoff_hz, double sample_rate_hz, std::size_t taps) {
  if (taps < 3 || taps % 2 == 0) throw Error(ErrorCode::InvalidConfig, "tap count must be odd and >= 3");
  if (!(cutoff_hz > 0.0 && cutoff_hz < sample_rate_hz / 2.0))
    throw Error(ErrorCode::InvalidConfig, "cutoff must lie in (0, Nyquist)");
  return {windowed_sinc(cutoff_hz, sample_rate_hz, taps), 0.0, cutoff_hz, sample_rate_hz};
}

FirFilter design_bandpass(double pass_lo_hz, double pass_hi_hz, double sample_rate_hz,
                          std::size_t taps) {
  // Cut-offs sit mid-way through the transition bands: 0.5-0.9 Hz below the
  // pass band and 5-7 Hz above it.
  const double lo_cut = pass_lo_hz - 0.2;
  const double hi_cut = pass_hi_hz + 1.0;
  if (!(lo_cut > 0.0 && hi_cut > lo_cut && hi_cut < sample_rate_hz / 2.0))
    throw Error(ErrorCode::InvalidConfig, "band edges incompatible with the sample rate");
  const auto high = design_lowpass(hi_cut, sample_rate_hz, taps).taps;
  const auto low = design_lowpass(lo_cut, sample_rate_hz, taps).taps;
  FirFilter f{std::vector<double>(taps), pass_lo_hz, pass_hi_hz, sample_rate_hz};
  for (std::size_t i = 0; i < taps; ++i) f.taps[i] = high[i] - low[i];
  return f;
}

FirFilter design_bandpass() { return design_bandpass(0.9, 5.0, kRecordRateHz, 81); }

std::complex<double> frequency_response(const FirFilter& filter, double freq_hz) {
  std::complex<double> acc = 0.0;
  const double w = 2.0 * std::numbers::pi * freq_hz / filter.sample_rate_hz;
  for (std::size_t i = 0; i < filter.taps.size(); ++i)
    acc += filter.taps[i] * std::polar(1.0, -w * static_cast<double>(i));
  return acc;
}

RawSignal apply_fir(const RawSignal& x, const FirFilter& filter) {
  const std::size_t taps = filter.taps.size();
  const std::size_t n = x.samples.size();
  if (n < taps) throw Error(ErrorCode::SignalTooShort, "signal shorter than the filter");
  const std::size_t half = (taps - 1) / 2;
  // Reverse once so each output is a plain dot product over the window.
  std::vector<double> rev(filter.taps.rbegin(), filter.taps.rend());
  RawSignal y{std::vector<double>(n, 0.0), x.sample_rate_hz};
  for (std::size_t i = 0; i < n; ++i) {
    // y[i] = sum_k h[k] x[i + half - k]; window start in x is i - half.
    const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(half);
    const std::size_t skip = start < 0 ? static_cast<std::size_t>(-start) : 0;
    const std::size_t x0 = static_cast<std::size_t>(start + static_cast<std::ptrdiff_t>(skip));
    const std::size_t len = std::min(taps - skip, n - x0);
    y.samples[i] = simd::dot(rev.data() + skip, x.samples.data() + x0, len);
  }
  return y;
}

RawSignal decimate(const RawSignal& x, std::size_t factor) {
  if (factor == 0) throw Error(ErrorCode::InvalidConfig, "decimation factor must be >= 1");
  if (x.samples.size() % factor != 0)
    throw Error(ErrorCode::LengthNotDivisible, "signal length not divisible by the factor");
  if (factor == 1) return x;
  const double new_rate = x.sample_rate_hz / static_cast<double>(factor);
  const auto filter = design_lowpass(0.4 * new_rate, x.sample_rate_hz, 20 * factor + 1);
  const RawSignal smooth = x.samples.size() >= filter.taps.size() ? apply_fir(x, filter) : x;
  RawSignal y{{}, new_rate};
  y.samples.reserve(x.samples.size() / factor);
  for (std::size_t i = 0; i < x.samples.size(); i += factor) y.samples.push_back(smooth.samples[i]);
  return y;
}

std::vector<double> minmax_normalize(std::span<const double> x) {
  if (x.empty()) throw Error(ErrorCode::DegenerateRange, "empty input");
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) throw Error(ErrorCode::DegenerateRange, "max equals min");
  const double range = hi - lo;
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = (x[i] - lo) / range;
  return y;
}

std::vector<std::vector<double>> segment(std::span<const double> x, std::size_t seg_len) {
  if (seg_len == 0) throw Error(ErrorCode::InvalidConfig, "segment length must be >= 1");
  std::vector<std::vector<double>> out;
  for (std::size_t start = 0; start + seg_len <= x.size(); start += seg_len)
    out.emplace_back(x.begin() + static_cast<std::ptrdiff_t>(start),
                     x.begin() + static_cast<std::ptrdiff_t>(start + seg_len));
  return out;
}

Record inject_artifact(const Record& record, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0))
    throw Error(ErrorCode::InvalidConfig, "artifact fraction must lie in [0, 1]");
  Record out = record;
  out.artifact_fraction = fraction;
  const std::size_t n = record.samples.size();
  const auto run = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (run == 0) return out;
  Rng rng(seed);
  const std::size_t offset = static_cast<std::size_t>(rng.below(n - run + 1));
  double level = rng.uniform(0.2, 0.8);
  for (std::size_t i = 0; i < run; ++i) {
    level = std::clamp(level + rng.normal(0.0, 0.08), 0.0, 1.0);
    out.samples[offset + i] = level;
  }
  return out;
}

std::vector<Record> preprocess(const RawSignal& raw, RhythmClass label) {
  if (std::abs(raw.sample_rate_hz - 240.0) > 1e-9)
    throw Error(ErrorCode::InvalidConfig, "preprocess expects 240 Hz input");
  const RawSignal down = decimate(raw, 6);
  const RawSignal filtered = apply_fir(down, design_bandpass());
  std::vector<Record> records;
  for (auto& seg : segment(filtered.samples, kRecordLength)) {
    Record r;
    r.samples = minmax_normalize(seg);
    r.label = label;
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace lsmgan::dsp
