#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lsmgan::spectral {

enum class SpectrumScale { Linear, Log };
enum class AggregationFn { Mean, Max };

inline constexpr double kLogEpsilon = 1e-8;
inline constexpr std::size_t kDefaultBlocks = 5;
inline constexpr std::size_t kDefaultMaxLag = 400;

struct Block {
  std::vector<double> samples;
  std::size_t index = 0;
};

/// One-sided periodogram of a block: block_len / 2 + 1 values.
struct Spectrum {
  std::vector<double> values;
  SpectrumScale scale = SpectrumScale::Log;
};

std::vector<Block> split_blocks(std::span<const double> record, std::size_t n_blocks);

/// Linear: |DFT_k|^2 / L (unnormalized forward DFT, rectangular window).
/// Log: log(linear + 1e-8).
Spectrum periodogram(const Block& block, SpectrumScale scale);

/// Squared L2 distance between the periodograms of index-paired blocks.
double matching_distance(const Block& real_block, const Block& synth_block, SpectrumScale scale);

/// One distance per pair i < j in lexicographic order: N(N-1)/2 values.
std::vector<double> self_consistency_distances(const std::vector<Block>& blocks,
                                               SpectrumScale scale);

double aggregate(AggregationFn fn, std::span<const double> values);

/// Normalized (biased) sample autocorrelation for lags 0..max_lag.
std::vector<double> autocorrelation(std::span<const double> x, std::size_t max_lag);

/// Biased squared MMD with a Gaussian kernel; bandwidth sigma^2 is the
/// median pairwise squared distance of the pooled sample.
double mmd(const std::vector<std::vector<double>>& set_a,
           const std::vector<std::vector<double>>& set_b);

/// Alternative, experimental reading: mean over index-matched pairs of the
/// kernel-induced distance k(a,a) + k(b,b) - 2 k(a,b), same bandwidth rule.
double mmd_paired_mean(const std::vector<std::vector<double>>& set_a,
                       const std::vector<std::vector<double>>& set_b);

double median_heuristic_sigma2(const std::vector<std::vector<double>>& pooled);

namespace detail {

/// Cached cos/sin tables of the one-sided DFT for a given length, stored
/// row-major as [bins x length].
template <class Real>
struct DftTable {
  std::size_t length = 0;
  std::size_t bins = 0;
  std::vector<Real> cos_table;
  std::vector<Real> sin_table;
};

template <class Real>
const DftTable<Real>& dft_table(std::size_t length);

/// Shared periodogram kernel used by both periodogram() and the
/// differentiable spectral-magnitude op, so the two agree bit for bit.
/// re/im may be null; when given they receive the raw DFT parts
/// (im_k = -sum x_t sin(2 pi k t / L)) and power receives |X_k|^2 / L.
template <class Real>
void power_spectrum(const DftTable<Real>& table, const Real* x, SpectrumScale scale, Real* out,
                    Real* re = nullptr, Real* im = nullptr, Real* power = nullptr);

}  // namespace detail

}  // namespace lsmgan::spectral
