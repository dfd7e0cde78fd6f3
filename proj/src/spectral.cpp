#include "lsmgan/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>

#include "lsmgan/error.hpp"
#include "lsmgan/simd/kernels.hpp"

namespace lsmgan::spectral {
namespace detail {

template <class Real>
const DftTable<Real>& dft_table(std::size_t length) {
  static std::mutex mutex;
  static std::map<std::size_t, std::unique_ptr<DftTable<Real>>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[length];
  if (!slot) {
    auto t = std::make_unique<DftTable<Real>>();
    t->length = length;
    t->bins = length / 2 + 1;
    t->cos_table.resize(t->bins * length);
    t->sin_table.resize(t->bins * length);
    for (std::size_t k = 0; k < t->bins; ++k) {
      for (std::size_t n = 0; n < length; ++n) {
        // Reduce k*n modulo L before scaling to keep the angle small.
        const double angle = 2.0 * std::numbers::pi * static_cast<double>((k * n) % length) /
                             static_cast<double>(length);
        t->cos_table[k * length + n] = static_cast<Real>(std::cos(angle));
        t->sin_table[k * length + n] = static_cast<Real>(std::sin(angle));
      }
    }
    slot = std::move(t);
  }
  return *slot;
}

template <class Real>
void power_spectrum(const DftTable<Real>& table, const Real* x, SpectrumScale scale, Real* out,
                    Real* re, Real* im, Real* power) {
  const std::size_t len = table.length;
  const Real inv_len = Real(1) / static_cast<Real>(len);
  for (std::size_t k = 0; k < table.bins; ++k) {
    const Real r = simd::dot(table.cos_table.data() + k * len, x, len);
    const Real i = -simd::dot(table.sin_table.data() + k * len, x, len);
    const Real p = (r * r + i * i) * inv_len;
    if (re) re[k] = r;
    if (im) im[k] = i;
    if (power) power[k] = p;
    out[k] = scale == SpectrumScale::Linear ? p : std::log(p + static_cast<Real>(kLogEpsilon));
  }
}

template const DftTable<float>& dft_table<float>(std::size_t);
template const DftTable<double>& dft_table<double>(std::size_t);
template void power_spectrum<float>(const DftTable<float>&, const float*, SpectrumScale, float*,
                                    float*, float*, float*);
template void power_spectrum<double>(const DftTable<double>&, const double*, SpectrumScale,
                                     double*, double*, double*, double*);

}  // namespace detail

std::vector<Block> split_blocks(std::span<const double> record, std::size_t n_blocks) {
  if (n_blocks == 0 || record.size() % n_blocks != 0)
    throw Error(ErrorCode::IndivisibleBlockCount,
                "record length " + std::to_string(record.size()) + " not divisible by " +
                    std::to_string(n_blocks));
  const std::size_t len = record.size() / n_blocks;
  std::vector<Block> blocks(n_blocks);
  for (std::size_t i = 0; i < n_blocks; ++i) {
    blocks[i].samples.assign(record.begin() + static_cast<std::ptrdiff_t>(i * len),
                             record.begin() + static_cast<std::ptrdiff_t>((i + 1) * len));
    blocks[i].index = i;
  }
  return blocks;
}

Spectrum periodogram(const Block& block, SpectrumScale scale) {
  if (block.samples.size() < 2) throw Error(ErrorCode::EmptyInput, "block needs >= 2 samples");
  const auto& table = detail::dft_table<double>(block.samples.size());
  Spectrum s{std::vector<double>(table.bins), scale};
  detail::power_spectrum(table, block.samples.data(), scale, s.values.data());
  return s;
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

}  // namespace

double matching_distance(const Block& real_block, const Block& synth_block, SpectrumScale scale) {
  if (real_block.samples.size() != synth_block.samples.size() ||
      real_block.index != synth_block.index)
    throw Error(ErrorCode::BlockMismatch, "blocks differ in length or index");
  return squared_distance(periodogram(real_block, scale).values,
                          periodogram(synth_block, scale).values);
}

std::vector<double> self_consistency_distances(const std::vector<Block>& blocks,
                                               SpectrumScale scale) {
  if (blocks.size() < 2) throw Error(ErrorCode::TooFewBlocks, "need at least two blocks");
  const std::size_t len = blocks.front().samples.size();
  std::vector<Spectrum> spectra;
  spectra.reserve(blocks.size());
  for (const auto& b : blocks) {
    if (b.samples.size() != len) throw Error(ErrorCode::BlockMismatch, "blocks differ in length");
    spectra.push_back(periodogram(b, scale));
  }
  std::vector<double> out;
  out.reserve(blocks.size() * (blocks.size() - 1) / 2);
  for (std::size_t i = 0; i < blocks.size(); ++i)
    for (std::size_t j = i + 1; j < blocks.size(); ++j)
      out.push_back(squared_distance(spectra[i].values, spectra[j].values));
  return out;
}

double aggregate(AggregationFn fn, std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "aggregate of an empty list");
  if (fn == AggregationFn::Max) return *std::max_element(values.begin(), values.end());
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

std::vector<double> autocorrelation(std::span<const double> x, std::size_t max_lag) {
  if (x.size() < 2 || max_lag >= x.size())
    throw Error(ErrorCode::DegenerateInput, "autocorrelation needs len >= 2 and max_lag < len");
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  std::vector<double> centered(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) centered[i] = x[i] - mean;
  const double denom = simd::dot(centered.data(), centered.data(), centered.size());
  if (!(denom > 0.0)) throw Error(ErrorCode::DegenerateInput, "constant input");
  std::vector<double> r(max_lag + 1);
  for (std::size_t lag = 0; lag <= max_lag; ++lag)
    r[lag] = simd::dot(centered.data(), centered.data() + lag, x.size() - lag) / denom;
  r[0] = 1.0;
  return r;
}

namespace {

void check_sets(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptySet, "MMD needs two nonempty sets");
  const std::size_t dim = a.front().size();
  for (const auto* set : {&a, &b})
    for (const auto& v : *set)
      if (v.size() != dim) throw Error(ErrorCode::LengthMismatch, "MMD vectors differ in length");
}

double sq_dist(const std::vector<double>& u, const std::vector<double>& v) {
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = u[i] - v[i];
    acc += d * d;
  }
  return acc;
}

}  // namespace

double median_heuristic_sigma2(const std::vector<std::vector<double>>& pooled) {
  std::vector<double> d;
  d.reserve(pooled.size() * (pooled.size() - 1) / 2);
  for (std::size_t i = 0; i < pooled.size(); ++i)
    for (std::size_t j = i + 1; j < pooled.size(); ++j) d.push_back(sq_dist(pooled[i], pooled[j]));
  if (d.empty()) return 1.0;
  const std::size_t mid = d.size() / 2;
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid), d.end());
  double median = d[mid];
  if (d.size() % 2 == 0) {
    const double lower = *std::max_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (median + lower);
  }
  return median > 0.0 ? median : 1.0;
}

double mmd(const std::vector<std::vector<double>>& set_a,
           const std::vector<std::vector<double>>& set_b) {
  check_sets(set_a, set_b);
  std::vector<std::vector<double>> pooled(set_a);
  pooled.insert(pooled.end(), set_b.begin(), set_b.end());
  const double gamma = 1.0 / (2.0 * median_heuristic_sigma2(pooled));
  auto mean_kernel = [&](const auto& u, const auto& v) {
    double acc = 0.0;
    for (const auto& x : u)
      for (const auto& y : v) acc += std::exp(-gamma * sq_dist(x, y));
    return acc / (static_cast<double>(u.size()) * static_cast<double>(v.size()));
  };
  const double value = mean_kernel(set_a, set_a) + mean_kernel(set_b, set_b) - 2.0 * mean_kernel(set_a, set_b);
  return std::max(0.0, value);
}

double mmd_paired_mean(const std::vector<std::vector<double>>& set_a,
                       const std::vector<std::vector<double>>& set_b) {
  check_sets(set_a, set_b);
  if (set_a.size() != set_b.size())
    throw Error(ErrorCode::LengthMismatch, "paired reading needs equal set sizes");
  std::vector<std::vector<double>> pooled(set_a);
  pooled.insert(pooled.end(), set_b.begin(), set_b.end());
  const double gamma = 1.0 / (2.0 * median_heuristic_sigma2(pooled));
  double acc = 0.0;
  for (std::size_t i = 0; i < set_a.size(); ++i)
    acc += 2.0 - 2.0 * std::exp(-gamma * sq_dist(set_a[i], set_b[i]));
  return acc / static_cast<double>(set_a.size());
}

}  // namespace lsmgan::spectral
