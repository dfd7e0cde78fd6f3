#pragma once

// Grid search over (lambda1, lambda2, F) scored by the MMD between
// autocorrelations of real and generated signals.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "lsmgan/dsp.hpp"
#include "lsmgan/gan.hpp"

namespace lsmgan::hyperopt {

using gan::LsmHyperParams;
using spectral::AggregationFn;

struct GridSpec {
  std::vector<double> lambda_values;
  std::vector<AggregationFn> f_values{AggregationFn::Mean, AggregationFn::Max};
  std::size_t k = 300;
  bool coarse = false;
  std::size_t max_lag = spectral::kDefaultMaxLag;
};

/// 0.0, 0.1, ..., 3.0 (31 values).
GridSpec fine_grid();
/// 0.0, 0.5, ..., 3.0 (7 values), a subset of the fine values.
GridSpec coarse_grid();

void validate(const GridSpec& spec);
std::size_t grid_size(const GridSpec& spec);

/// Produces k generated signals for a combination; seed fixes the draw.
using SignalSource = std::function<std::vector<std::vector<double>>(
    const LsmHyperParams& hp, std::size_t k, std::uint64_t seed)>;

/// Scores one combination; used directly by planted-optimum checks.
using Scorer = std::function<double(const LsmHyperParams& hp)>;

struct ScoredCombo {
  LsmHyperParams hp;
  double score = 0.0;
};

struct GridResult {
  LsmHyperParams best;
  double best_score = 0.0;
  /// Every grid point in iteration order (lambda1 outer, lambda2, F inner).
  std::vector<ScoredCombo> scores;
  std::size_t evaluated = 0;
};

/// k records drawn without replacement; the same (records, k, seed) always
/// yields the same subset. Throws InsufficientData when k exceeds the pool.
std::vector<std::vector<double>> select_subset(const std::vector<dsp::Record>& records,
                                               std::size_t k, std::uint64_t seed);

/// Set-level MMD between autocorrelations of a seeded k-subset of the real
/// records and k signals from the source (called with the same seed).
double score_combo(const LsmHyperParams& hp, const std::vector<dsp::Record>& real_records,
                   const SignalSource& source, std::size_t k, std::uint64_t seed,
                   std::size_t max_lag = spectral::kDefaultMaxLag);

/// Evaluates every grid point (up to `jobs` at a time) and keeps the first
/// strictly smaller score in iteration order.
GridResult grid_search(const GridSpec& spec, const Scorer& scorer, std::size_t jobs = 1);

GridResult grid_search(const GridSpec& spec, const std::vector<dsp::Record>& real_records,
                       const SignalSource& source, std::uint64_t seed, std::size_t jobs = 1);

/// Trains an Lsm generator per combination (memoized by combination) with
/// the given schedule and samples from it.
class TrainingSource {
 public:
  TrainingSource(std::vector<dsp::Record> records, nn::GeneratorKind kind,
                 gan::TrainSchedule sched);

  std::vector<std::vector<double>> operator()(const LsmHyperParams& hp, std::size_t k,
                                              std::uint64_t seed);
  std::size_t trained() const;

 private:
  std::vector<dsp::Record> records_;
  nn::GeneratorKind kind_;
  gan::TrainSchedule sched_;
  mutable std::mutex mutex_;
  std::map<std::tuple<double, double, int>, std::shared_ptr<nn::Generator<float>>> cache_;
};

/// Scorer-logic stand-in: block permutations of the seeded real subset, the
/// same for every combination. Exercises the search without training.
SignalSource permutation_stub(const std::vector<dsp::Record>& records);

/// lambda1,lambda2,f,score
void write_scores_csv(const std::filesystem::path& path, const GridResult& result);
/// JSON summary naming the best set.
void write_summary(const std::filesystem::path& path, const GridResult& result,
                   const GridSpec& spec);

}  // namespace lsmgan::hyperopt
