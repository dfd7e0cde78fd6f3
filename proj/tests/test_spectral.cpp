#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <vector>

#include "lsmgan/error.hpp"
#include "lsmgan/rng.hpp"
#include "lsmgan/spectral.hpp"

using namespace lsmgan;
using namespace lsmgan::spectral;

namespace {

// One-sided periodogram straight from the DFT definition.
std::vector<double> brute_periodogram(const std::vector<double>& x, SpectrumScale scale) {
  const std::size_t n = x.size();
  std::vector<double> out(n / 2 + 1);
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t)
      acc += x[t] * std::polar(1.0, -2.0 * std::numbers::pi * double(k) * double(t) / double(n));
    out[k] = std::norm(acc) / double(n);
    if (scale == SpectrumScale::Log) out[k] = std::log(out[k] + 1e-8);
  }
  return out;
}

double brute_distance(const std::vector<double>& a, const std::vector<double>& b, SpectrumScale s) {
  const auto pa = brute_periodogram(a, s);
  const auto pb = brute_periodogram(b, s);
  double d = 0;
  for (std::size_t k = 0; k < pa.size(); ++k) d += (pa[k] - pb[k]) * (pa[k] - pb[k]);
  return d;
}

std::vector<double> random_vector(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

}  // namespace

TEST_CASE("split_blocks partitions a record") {
  std::vector<double> x(1200);
  std::iota(x.begin(), x.end(), 0.0);
  const auto blocks = split_blocks(x, 5);
  REQUIRE(blocks.size() == 5);
  std::vector<double> joined;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    CHECK(blocks[i].index == i);
    CHECK(blocks[i].samples.size() == 240);
    joined.insert(joined.end(), blocks[i].samples.begin(), blocks[i].samples.end());
  }
  CHECK(joined == x);
  try {
    split_blocks(x, 7);
    FAIL("expected IndivisibleBlockCount");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IndivisibleBlockCount);
  }
}

TEST_CASE("periodogram of a zero block under Log is log(1e-8)") {
  const auto s = periodogram(Block{std::vector<double>(240, 0.0), 0}, SpectrumScale::Log);
  REQUIRE(s.values.size() == 121);
  for (double v : s.values) CHECK(v == std::log(1e-8));
}

TEST_CASE("unit sine at an exact bin concentrates at that bin") {
  const std::size_t n = 240, k0 = 12;
  Block b{std::vector<double>(n), 0};
  for (std::size_t t = 0; t < n; ++t) b.samples[t] = std::sin(2 * std::numbers::pi * k0 * t / double(n));
  const auto s = periodogram(b, SpectrumScale::Linear);
  CHECK(s.values[k0] == doctest::Approx(n / 4.0).epsilon(1e-12));
  for (std::size_t k = 0; k < s.values.size(); ++k)
    if (k != k0) CHECK(s.values[k] < 1e-9);
}

TEST_CASE("periodogram satisfies Parseval on 100 random blocks") {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = (trial % 2 == 0) ? 240 : 17;  // even and odd lengths
    Block b{random_vector(rng, n), 0};
    const auto s = periodogram(b, SpectrumScale::Linear);
    double spectral_energy = 0;
    for (std::size_t k = 0; k < s.values.size(); ++k) {
      const bool unpaired = k == 0 || (n % 2 == 0 && k == n / 2);
      spectral_energy += (unpaired ? 1.0 : 2.0) * s.values[k];
    }
    const double time_energy = std::inner_product(b.samples.begin(), b.samples.end(), b.samples.begin(), 0.0);
    CHECK(std::abs(spectral_energy - time_energy) / time_energy < 1e-9);
  }
}

TEST_CASE("periodogram matches the DFT-by-definition oracle") {
  Rng rng(5);
  for (std::size_t n : {8, 9, 12, 16}) {
    const auto x = random_vector(rng, n);
    for (auto scale : {SpectrumScale::Linear, SpectrumScale::Log}) {
      const auto got = periodogram(Block{x, 0}, scale).values;
      const auto want = brute_periodogram(x, scale);
      REQUIRE(got.size() == want.size());
      for (std::size_t k = 0; k < got.size(); ++k) CHECK(got[k] == doctest::Approx(want[k]).epsilon(1e-9));
    }
  }
}

TEST_CASE("matching_distance") {
  const std::vector<double> a{0.1, 0.9, 0.3, 0.7, 0.2, 0.8, 0.4, 0.6};
  const std::vector<double> b{0.5, 0.2, 0.9, 0.1, 0.6, 0.3, 0.8, 0.0};
  for (auto scale : {SpectrumScale::Linear, SpectrumScale::Log}) {
    CHECK(matching_distance(Block{a, 2}, Block{a, 2}, scale) == 0.0);
    const double ab = matching_distance(Block{a, 2}, Block{b, 2}, scale);
    CHECK(ab == matching_distance(Block{b, 2}, Block{a, 2}, scale));
    const double want = brute_distance(a, b, scale);
    CHECK(std::abs(ab - want) <= 1e-9 * std::max(1.0, want));
  }
  auto expect_mismatch = [](const Block& x, const Block& y) {
    try {
      matching_distance(x, y, SpectrumScale::Log);
      FAIL("expected BlockMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::BlockMismatch);
    }
  };
  expect_mismatch(Block{a, 0}, Block{b, 1});
  expect_mismatch(Block{a, 0}, Block{std::vector<double>(7, 0.0), 0});
}

TEST_CASE("self_consistency_distances") {
  std::vector<Block> same(5, Block{std::vector<double>(16, 0.25), 0});
  for (std::size_t i = 0; i < 5; ++i) same[i].index = i;
  const auto zeros = self_consistency_distances(same, SpectrumScale::Log);
  REQUIRE(zeros.size() == 10);
  for (double z : zeros) CHECK(z == 0.0);

  Rng rng(3);
  std::vector<Block> blocks;
  for (std::size_t i = 0; i < 3; ++i) blocks.push_back({random_vector(rng, 8), i});
  for (auto scale : {SpectrumScale::Linear, SpectrumScale::Log}) {
    const auto d = self_consistency_distances(blocks, scale);
    REQUIRE(d.size() == 3);
    std::size_t at = 0;
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = i + 1; j < 3; ++j, ++at) {
        const double want = brute_distance(blocks[i].samples, blocks[j].samples, scale);
        CHECK(std::abs(d[at] - want) <= 1e-9 * std::max(1.0, want));
      }
  }

  // Permuting blocks permutes the pair values.
  std::vector<Block> swapped{blocks[1], blocks[0], blocks[2]};
  const auto d = self_consistency_distances(blocks, SpectrumScale::Log);
  const auto ds = self_consistency_distances(swapped, SpectrumScale::Log);
  CHECK(ds[0] == d[0]);  // (1,0) vs (0,1)
  CHECK(ds[1] == d[2]);  // (1,2)
  CHECK(ds[2] == d[1]);  // (0,2)

  try {
    self_consistency_distances({blocks[0]}, SpectrumScale::Log);
    FAIL("expected TooFewBlocks");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooFewBlocks);
  }
}

TEST_CASE("aggregate") {
  const std::vector<double> v{1, 2, 3};
  CHECK(aggregate(AggregationFn::Mean, v) == 2.0);
  CHECK(aggregate(AggregationFn::Max, v) == 3.0);
  Rng rng(9);
  for (int i = 0; i < 50; ++i) {
    const auto r = random_vector(rng, 1 + i % 7);
    CHECK(aggregate(AggregationFn::Max, r) >= aggregate(AggregationFn::Mean, r));
  }
  try {
    aggregate(AggregationFn::Mean, std::vector<double>{});
    FAIL("expected EmptyInput");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyInput);
  }
}

TEST_CASE("autocorrelation") {
  Rng rng(21);
  const auto noise = random_vector(rng, 1200);
  const auto r = autocorrelation(noise, 400);
  REQUIRE(r.size() == 401);
  CHECK(r[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(r[10]) < 0.1);
  for (double v : r) CHECK(std::abs(v) <= 1.0 + 1e-9);

  // Definition computed independently.
  double mean = std::accumulate(noise.begin(), noise.end(), 0.0) / noise.size();
  double den = 0, num = 0;
  for (double x : noise) den += (x - mean) * (x - mean);
  for (std::size_t t = 0; t + 10 < noise.size(); ++t) num += (noise[t] - mean) * (noise[t + 10] - mean);
  CHECK(r[10] == doctest::Approx(num / den).epsilon(1e-10));

  std::vector<double> periodic(1200);
  for (std::size_t t = 0; t < periodic.size(); ++t) periodic[t] = double((t % 25) * (t % 25));
  CHECK(autocorrelation(periodic, 30)[25] > 0.95);
  // The biased estimator shrinks lag P by (n - P) / n; check the unbiased ratio.
  CHECK(autocorrelation(periodic, 30)[25] * 1200.0 / 1175.0 > 0.99);

  try {
    autocorrelation(std::vector<double>(100, 1.0), 10);
    FAIL("expected DegenerateInput");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateInput);
  }
}

TEST_CASE("mmd") {
  Rng rng(4);
  auto gaussian_set = [&](double mean, std::size_t n) {
    std::vector<std::vector<double>> s(n);
    for (auto& v : s) v = {rng.normal(mean, 1.0)};
    return s;
  };
  const auto a = gaussian_set(0, 300);
  const auto a2 = gaussian_set(0, 300);
  const auto b = gaussian_set(3, 300);
  CHECK(mmd(a, a) < 1e-12);
  CHECK(mmd(a, b) == doctest::Approx(mmd(b, a)).epsilon(1e-12));
  CHECK(mmd(a, b) > 5.0 * mmd(a, a2));
  CHECK(mmd(a, a2) >= 0.0);

  try {
    mmd({}, a);
    FAIL("expected EmptySet");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptySet);
  }
  try {
    mmd({{1.0, 2.0}}, {{1.0}});
    FAIL("expected LengthMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LengthMismatch);
  }
}

TEST_CASE("mmd_paired_mean is zero for identical sets") {
  const std::vector<std::vector<double>> a{{0.0, 1.0}, {2.0, 0.5}, {1.0, 1.0}};
  CHECK(mmd_paired_mean(a, a) == doctest::Approx(0.0));
  const std::vector<std::vector<double>> b{{3.0, 1.0}, {0.0, 0.5}, {1.0, 4.0}};
  CHECK(mmd_paired_mean(a, b) > 0.0);
}
