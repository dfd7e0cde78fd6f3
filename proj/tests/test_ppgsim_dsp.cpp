#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "lsmgan/dsp.hpp"
#include "lsmgan/error.hpp"
#include "lsmgan/ppgsim.hpp"
#include "lsmgan/rng.hpp"

using namespace lsmgan;

namespace {

// Peak detector written against the signal only: remove a 1 s moving
// average, smooth over ~60 ms, then keep local maxima over +-0.2 s that
// exceed half the 95th percentile.
std::vector<std::size_t> detect_peaks(const std::vector<double>& x, double rate) {
  const auto n = x.size();
  auto moving_average = [&](const std::vector<double>& v, std::size_t half) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t lo = i >= half ? i - half : 0, hi = std::min(n - 1, i + half);
      double acc = 0;
      for (std::size_t j = lo; j <= hi; ++j) acc += v[j];
      out[i] = acc / double(hi - lo + 1);
    }
    return out;
  };
  const auto trend = moving_average(x, std::size_t(rate / 2));
  std::vector<double> detrended(n);
  for (std::size_t i = 0; i < n; ++i) detrended[i] = x[i] - trend[i];
  const auto smooth = moving_average(detrended, std::size_t(rate * 0.03));
  auto sorted = smooth;
  std::sort(sorted.begin(), sorted.end());
  const double threshold = 0.5 * sorted[std::size_t(0.95 * double(n))];
  const auto w = std::size_t(rate * 0.2);
  std::vector<std::size_t> peaks;
  for (std::size_t i = w; i + w < n; ++i) {
    if (smooth[i] < threshold) continue;
    bool is_max = true;
    for (std::size_t j = i - w; j <= i + w && is_max; ++j)
      if (smooth[j] > smooth[i] || (smooth[j] == smooth[i] && j < i)) is_max = false;
    if (is_max) peaks.push_back(i);
  }
  return peaks;
}

double interval_cv(const std::vector<std::size_t>& peaks) {
  std::vector<double> d;
  for (std::size_t i = 1; i < peaks.size(); ++i) d.push_back(double(peaks[i] - peaks[i - 1]));
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / double(d.size());
  double var = 0;
  for (double v : d) var += (v - mean) * (v - mean);
  return std::sqrt(var / double(d.size() - 1)) / mean;
}

ppgsim::SimConfig config_for(RhythmClass c, std::uint64_t seed) {
  auto cfg = ppgsim::default_config(c);
  cfg.seed = seed;
  return cfg;
}

dsp::Record ramp_record() {
  dsp::Record r;
  r.samples.resize(dsp::kRecordLength);
  for (std::size_t i = 0; i < r.samples.size(); ++i) r.samples[i] = 0.5 + 0.25 * std::sin(0.01 * double(i));
  r.label = RhythmClass::AF;
  return r;
}

template <class F>
void expect_code(ErrorCode code, F&& f) {
  try {
    f();
    FAIL("expected " << to_string(code));
  } catch (const Error& e) {
    CHECK(e.code() == code);
  }
}

}  // namespace

TEST_CASE("generate_record length and determinism") {
  const auto a = ppgsim::generate_record(RhythmClass::NonAF, config_for(RhythmClass::NonAF, 1));
  CHECK(a.samples.size() == 7200);
  CHECK(a.sample_rate_hz == 240.0);
  const auto b = ppgsim::generate_record(RhythmClass::NonAF, config_for(RhythmClass::NonAF, 1));
  CHECK(a.samples == b.samples);
  for (double v : a.samples) REQUIRE(std::isfinite(v));
}

TEST_CASE("generate_record validates the configuration") {
  auto af = config_for(RhythmClass::AF, 1);
  af.rr_cv = 0.1;
  expect_code(ErrorCode::InvalidConfig, [&] { ppgsim::generate_record(RhythmClass::AF, af); });
  auto nonaf = config_for(RhythmClass::NonAF, 1);
  nonaf.rr_cv = 0.2;
  expect_code(ErrorCode::InvalidConfig, [&] { ppgsim::generate_record(RhythmClass::NonAF, nonaf); });
  nonaf = config_for(RhythmClass::NonAF, 1);
  nonaf.mean_hr_bpm = 200;
  expect_code(ErrorCode::InvalidConfig, [&] { ppgsim::generate_record(RhythmClass::NonAF, nonaf); });
  nonaf = config_for(RhythmClass::NonAF, 1);
  nonaf.duration_s = 30.001;
  expect_code(ErrorCode::InvalidConfig, [&] { ppgsim::generate_record(RhythmClass::NonAF, nonaf); });
}

TEST_CASE("inter-peak variability separates the classes over 100 records each") {
  double min_af = 1e9, max_nonaf = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto af = ppgsim::generate_record(RhythmClass::AF, config_for(RhythmClass::AF, 500 + s));
    const auto nonaf = ppgsim::generate_record(RhythmClass::NonAF, config_for(RhythmClass::NonAF, 500 + s));
    const double cv_af = interval_cv(detect_peaks(af.samples, af.sample_rate_hz));
    const double cv_nonaf = interval_cv(detect_peaks(nonaf.samples, nonaf.sample_rate_hz));
    CHECK(cv_af > 0.10);
    min_af = std::min(min_af, cv_af);
    max_nonaf = std::max(max_nonaf, cv_nonaf);
  }
  MESSAGE("min AF cv " << min_af << ", max NonAF cv " << max_nonaf);
  CHECK(min_af > max_nonaf);
}

TEST_CASE("generate_corpus counts, order and determinism") {
  const auto af = config_for(RhythmClass::AF, 7), nonaf = config_for(RhythmClass::NonAF, 7);
  const auto c = ppgsim::generate_corpus(3, 3, af, nonaf);
  REQUIRE(c.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(c[i].label == (i < 3 ? RhythmClass::AF : RhythmClass::NonAF));
    CHECK(c[i].seed == 7 + i % 3);
  }
  const auto again = ppgsim::generate_corpus(3, 3, af, nonaf);
  for (std::size_t i = 0; i < 6; ++i) CHECK(c[i].signal.samples == again[i].signal.samples);
  const auto only_nonaf = ppgsim::generate_corpus(0, 5, af, nonaf);
  CHECK(only_nonaf.size() == 5);
  CHECK(std::all_of(only_nonaf.begin(), only_nonaf.end(),
                    [](const auto& r) { return r.label == RhythmClass::NonAF; }));
}

TEST_CASE("decimate preserves DC and resamples a sine") {
  ppgsim::RawSignal dc{std::vector<double>(7200, 1.0), 240.0};
  const auto d = dsp::decimate(dc, 6);
  REQUIRE(d.samples.size() == 1200);
  CHECK(d.sample_rate_hz == 40.0);
  for (std::size_t i = 20; i + 20 < d.samples.size(); ++i) CHECK(std::abs(d.samples[i] - 1.0) < 1e-6);

  ppgsim::RawSignal sine{std::vector<double>(7200), 240.0};
  for (std::size_t t = 0; t < 7200; ++t) sine.samples[t] = std::sin(2 * std::numbers::pi * 2.0 * double(t) / 240.0);
  const auto s = dsp::decimate(sine, 6);
  for (std::size_t i = 20; i + 20 < s.samples.size(); ++i)
    CHECK(std::abs(s.samples[i] - std::sin(2 * std::numbers::pi * 2.0 * double(i) / 40.0)) < 1e-2);

  expect_code(ErrorCode::LengthNotDivisible, [] { dsp::decimate({std::vector<double>(7201, 0.0), 240.0}, 6); });
}

TEST_CASE("band-pass filter response") {
  const auto f = dsp::design_bandpass();
  REQUIRE(f.taps.size() == 81);
  auto reversed = f.taps;
  std::reverse(reversed.begin(), reversed.end());
  CHECK(reversed == f.taps);
  // Response from the tap DFT written out here.
  auto gain = [&](double hz) {
    double re = 0, im = 0;
    for (std::size_t i = 0; i < f.taps.size(); ++i) {
      re += f.taps[i] * std::cos(2 * std::numbers::pi * hz / 40.0 * double(i));
      im -= f.taps[i] * std::sin(2 * std::numbers::pi * hz / 40.0 * double(i));
    }
    return std::hypot(re, im);
  };
  CHECK(gain(2.0) >= 0.891);
  CHECK(gain(2.0) <= 1.122);
  CHECK(gain(0.2) <= 0.1);
  CHECK(std::abs(dsp::frequency_response(f, 2.0)) == doctest::Approx(gain(2.0)).epsilon(1e-12));
}

TEST_CASE("apply_fir") {
  const auto f = dsp::design_bandpass();
  ppgsim::RawSignal zero{std::vector<double>(400, 0.0), 40.0};
  for (double v : dsp::apply_fir(zero, f).samples) CHECK(v == 0.0);

  ppgsim::RawSignal impulse{std::vector<double>(401, 0.0), 40.0};
  impulse.samples[200] = 1.0;
  const auto y = dsp::apply_fir(impulse, f);
  for (std::size_t i = 0; i < 401; ++i) {
    const long k = long(i) - 200 + 40;
    const double want = (k >= 0 && k < 81) ? f.taps[std::size_t(k)] : 0.0;
    CHECK(y.samples[i] == doctest::Approx(want).epsilon(1e-12));
  }

  ppgsim::RawSignal offset{std::vector<double>(1200), 40.0};
  for (std::size_t t = 0; t < 1200; ++t) offset.samples[t] = 5.0 + std::sin(2 * std::numbers::pi * 2.0 * double(t) / 40.0);
  const auto z = dsp::apply_fir(offset, f);
  double mean = 0, power = 0;
  for (std::size_t i = 100; i < 1100; ++i) {
    mean += z.samples[i];
    power += z.samples[i] * z.samples[i];
  }
  mean /= 1000.0;
  power /= 1000.0;
  CHECK(std::abs(mean) < 0.05);
  CHECK(power > 0.5 * 0.891 * 0.891);  // sine of unit amplitude retained

  Rng rng(3);
  ppgsim::RawSignal a{std::vector<double>(500), 40.0}, b{std::vector<double>(500), 40.0}, mix{std::vector<double>(500), 40.0};
  for (std::size_t i = 0; i < 500; ++i) {
    a.samples[i] = rng.normal();
    b.samples[i] = rng.normal();
    mix.samples[i] = 2.5 * a.samples[i] - 0.75 * b.samples[i];
  }
  const auto ya = dsp::apply_fir(a, f), yb = dsp::apply_fir(b, f), ym = dsp::apply_fir(mix, f);
  for (std::size_t i = 0; i < 500; ++i) {
    const double want = 2.5 * ya.samples[i] - 0.75 * yb.samples[i];
    CHECK(std::abs(ym.samples[i] - want) <= 1e-9 * std::max(1.0, std::abs(want)));
  }
  expect_code(ErrorCode::SignalTooShort, [&] { dsp::apply_fir({std::vector<double>(50, 0.0), 40.0}, f); });
}

TEST_CASE("minmax_normalize") {
  const std::vector<double> x{0, 5, 10};
  CHECK(dsp::minmax_normalize(x) == std::vector<double>{0, 0.5, 1});
  expect_code(ErrorCode::DegenerateRange, [] { dsp::minmax_normalize(std::vector<double>(4, 2.0)); });
  Rng rng(4);
  std::vector<double> r(64);
  for (auto& v : r) v = rng.normal(3, 2);
  const auto once = dsp::minmax_normalize(r);
  const auto twice = dsp::minmax_normalize(once);
  for (std::size_t i = 0; i < r.size(); ++i) CHECK(twice[i] == doctest::Approx(once[i]).epsilon(1e-15));
}

TEST_CASE("segment drops the remainder") {
  CHECK(dsp::segment(std::vector<double>(3600, 0.0), 1200).size() == 3);
  CHECK(dsp::segment(std::vector<double>(1199, 0.0), 1200).empty());
  std::vector<double> x(2500);
  std::iota(x.begin(), x.end(), 0.0);
  const auto s = dsp::segment(x, 1200);
  REQUIRE(s.size() == 2);
  CHECK(s[1].front() == 1200.0);
  CHECK(s[1].back() == 2399.0);
}

TEST_CASE("inject_artifact") {
  const auto r = ramp_record();
  const auto same = dsp::inject_artifact(r, 0.0, 1);
  CHECK(same.samples == r.samples);
  CHECK(same.artifact_fraction == 0.0);

  const auto full = dsp::inject_artifact(r, 1.0, 1);
  std::size_t kept = 0;
  for (std::size_t i = 0; i < r.samples.size(); ++i) kept += full.samples[i] == r.samples[i];
  CHECK(kept == 0);

  const auto half = dsp::inject_artifact(r, 0.5, 9);
  std::size_t first = r.samples.size(), last = 0, changed = 0;
  for (std::size_t i = 0; i < r.samples.size(); ++i)
    if (half.samples[i] != r.samples[i]) {
      ++changed;
      first = std::min(first, i);
      last = i;
    }
  CHECK(changed == 600);
  CHECK(last - first + 1 == 600);
  CHECK(dsp::inject_artifact(r, 0.5, 9).samples == half.samples);
  CHECK(half.artifact_fraction == 0.5);
  CHECK(half.label == r.label);
  CHECK(half.samples.size() == r.samples.size());
  for (double v : half.samples) CHECK((v >= 0.0 && v <= 1.0));
  expect_code(ErrorCode::InvalidConfig, [&] { dsp::inject_artifact(r, 1.5, 1); });
}

TEST_CASE("preprocess maps k x 30 s to k records in [0, 1]") {
  for (std::size_t k : {1, 2}) {
    auto cfg = config_for(RhythmClass::AF, 40 + k);
    cfg.duration_s = 30.0 * double(k);
    const auto raw = ppgsim::generate_record(RhythmClass::AF, cfg);
    const auto recs = dsp::preprocess(raw, RhythmClass::AF);
    REQUIRE(recs.size() == k);
    for (const auto& rec : recs) {
      CHECK(rec.samples.size() == 1200);
      CHECK(rec.sample_rate_hz == 40.0);
      CHECK(rec.label == RhythmClass::AF);
      CHECK(*std::min_element(rec.samples.begin(), rec.samples.end()) == 0.0);
      CHECK(*std::max_element(rec.samples.begin(), rec.samples.end()) == 1.0);
    }
  }
}
