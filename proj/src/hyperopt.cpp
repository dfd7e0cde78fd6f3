#include "lsmgan/hyperopt.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "lsmgan/augment.hpp"
#include "lsmgan/error.hpp"
#include "lsmgan/parallel.hpp"
#include "lsmgan/rng.hpp"

namespace lsmgan::hyperopt {

namespace {

std::vector<double> lambda_ladder(int step_tenths) {
  std::vector<double> out;
  for (int i = 0; i <= 30; i += step_tenths) out.push_back(static_cast<double>(i) / 10.0);
  return out;
}

std::vector<std::vector<double>> autocorrelations(const std::vector<std::vector<double>>& signals,
                                                  std::size_t max_lag) {
  std::vector<std::vector<double>> out;
  out.reserve(signals.size());
  for (const auto& s : signals) {
    try {
      out.push_back(spectral::autocorrelation(s, max_lag));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateInput) throw;
      // A flat signal has no defined autocorrelation; score it as lag-free.
      std::vector<double> flat(max_lag + 1, 0.0);
      flat[0] = 1.0;
      out.push_back(std::move(flat));
    }
  }
  return out;
}

}  // namespace

GridSpec fine_grid() {
  GridSpec g;
  g.lambda_values = lambda_ladder(1);
  return g;
}

GridSpec coarse_grid() {
  GridSpec g;
  g.lambda_values = lambda_ladder(5);
  g.coarse = true;
  return g;
}

void validate(const GridSpec& spec) {
  if (spec.lambda_values.empty() || spec.f_values.empty())
    throw Error(ErrorCode::InvalidConfig, "empty grid");
  for (std::size_t i = 0; i < spec.lambda_values.size(); ++i) {
    const double v = spec.lambda_values[i];
    if (!(v >= 0.0 && v <= 3.0)) throw Error(ErrorCode::InvalidConfig, "lambda outside [0, 3]");
    if (i > 0 && !(v > spec.lambda_values[i - 1]))
      throw Error(ErrorCode::InvalidConfig, "lambda values must be strictly ascending");
  }
  if (spec.k < 2) throw Error(ErrorCode::InvalidConfig, "k must be >= 2");
}

std::size_t grid_size(const GridSpec& spec) {
  return spec.lambda_values.size() * spec.lambda_values.size() * spec.f_values.size();
}

std::vector<std::vector<double>> select_subset(const std::vector<dsp::Record>& records,
                                               std::size_t k, std::uint64_t seed) {
  if (records.size() < k)
    throw Error(ErrorCode::InsufficientData, std::to_string(records.size()) +
                                                 " records, need " + std::to_string(k));
  std::vector<std::size_t> idx(records.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(derive_seed(seed, 0x5e1ec7));
  rng.shuffle(std::span<std::size_t>(idx));
  std::vector<std::vector<double>> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(records[idx[i]].samples);
  return out;
}

double score_combo(const LsmHyperParams& hp, const std::vector<dsp::Record>& real_records,
                   const SignalSource& source, std::size_t k, std::uint64_t seed,
                   std::size_t max_lag) {
  const auto real = select_subset(real_records, k, seed);
  const auto synth = source(hp, k, seed);
  if (synth.size() != k)
    throw Error(ErrorCode::LengthMismatch, "source returned " + std::to_string(synth.size()) +
                                               " signals, expected " + std::to_string(k));
  return spectral::mmd(autocorrelations(real, max_lag), autocorrelations(synth, max_lag));
}

GridResult grid_search(const GridSpec& spec, const Scorer& scorer, std::size_t jobs) {
  validate(spec);
  GridResult result;
  result.scores.reserve(grid_size(spec));
  for (double l1 : spec.lambda_values)
    for (double l2 : spec.lambda_values)
      for (AggregationFn f : spec.f_values) result.scores.push_back({{l1, l2, f}, 0.0});

  parallel_for(result.scores.size(), jobs,
               [&](std::size_t i) { result.scores[i].score = scorer(result.scores[i].hp); });

  double least = std::numeric_limits<double>::infinity();
  for (const auto& entry : result.scores) {
    if (entry.score < least) {
      least = entry.score;
      result.best = entry.hp;
    }
  }
  result.best_score = least;
  result.evaluated = result.scores.size();
  return result;
}

GridResult grid_search(const GridSpec& spec, const std::vector<dsp::Record>& real_records,
                       const SignalSource& source, std::uint64_t seed, std::size_t jobs) {
  validate(spec);
  if (real_records.size() < spec.k)
    throw Error(ErrorCode::InsufficientData, "fewer real records than k");
  const Scorer scorer = [&](const LsmHyperParams& hp) {
    return score_combo(hp, real_records, source, spec.k, seed, spec.max_lag);
  };
  return grid_search(spec, scorer, jobs);
}

TrainingSource::TrainingSource(std::vector<dsp::Record> records, nn::GeneratorKind kind,
                               gan::TrainSchedule sched)
    : records_(std::move(records)), kind_(kind), sched_(sched) {}

std::vector<std::vector<double>> TrainingSource::operator()(const LsmHyperParams& hp,
                                                            std::size_t k, std::uint64_t seed) {
  const auto key = std::make_tuple(hp.lambda1, hp.lambda2, static_cast<int>(hp.f));
  std::shared_ptr<nn::Generator<float>> gen;
  {
    std::lock_guard lock(mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) gen = it->second;
  }
  if (!gen) {
    auto trained = gan::train_gan(records_, kind_, gan::GanLossKind::Lsm, hp, sched_);
    gen = std::make_shared<nn::Generator<float>>(std::move(trained.generator));
    std::lock_guard lock(mutex_);
    cache_.emplace(key, gen);
  }
  return gan::sample(*gen, k, seed);
}

std::size_t TrainingSource::trained() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

SignalSource permutation_stub(const std::vector<dsp::Record>& records) {
  return [&records](const LsmHyperParams&, std::size_t k, std::uint64_t seed) {
    auto subset = select_subset(records, k, seed);
    Rng rng(derive_seed(seed, 0x9e77));
    std::vector<std::vector<double>> out;
    out.reserve(k);
    for (auto& s : subset) {
      dsp::Record r;
      r.samples = std::move(s);
      out.push_back(augment::permutation(r, rng.next_u64()).samples);
    }
    return out;
  };
}

void write_scores_csv(const std::filesystem::path& path, const GridResult& result) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << "lambda1,lambda2,f,score\n";
  for (const auto& e : result.scores)
    out << gan::format_number(e.hp.lambda1) << ',' << gan::format_number(e.hp.lambda2) << ','
        << gan::to_string(e.hp.f) << ',' << gan::format_number(e.score) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

void write_summary(const std::filesystem::path& path, const GridResult& result,
                   const GridSpec& spec) {
  nlohmann::ordered_json j;
  j["best"] = {{"lambda1", result.best.lambda1},
               {"lambda2", result.best.lambda2},
               {"f", gan::to_string(result.best.f)}};
  j["best_score"] = result.best_score;
  j["evaluated"] = result.evaluated;
  j["k"] = spec.k;
  j["coarse"] = spec.coarse;
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace lsmgan::hyperopt
