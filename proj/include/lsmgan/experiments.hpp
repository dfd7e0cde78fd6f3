#pragma once

// The three evaluation protocols: rebalancing (1), artifact resilience (2)
// and balanced sample-size ladders (3).

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include <json.hpp>

#include "lsmgan/classifier.hpp"
#include "lsmgan/dsp.hpp"
#include "lsmgan/eval.hpp"
#include "lsmgan/gan.hpp"
#include "lsmgan/types.hpp"

namespace lsmgan::experiments {

using dsp::Record;

struct ExperimentConfig {
  std::uint64_t seed = 7;
  std::size_t train_af = 1500;
  std::size_t train_nonaf = 10500;
  std::size_t test_af = 600;
  std::size_t test_nonaf = 700;
  double train_hr_bpm = 80.0;
  double train_noise_std = 0.03;
  // Shifted acquisition conditions for the test site.
  double test_hr_bpm = 91.0;
  double test_noise_std = 0.07;
  /// AF at the test site is less irregular than in training.
  double test_af_rr_cv = 0.15;
  /// Share of training records given a mild (Low-group) artifact.
  double train_artifact_share = 0.2;
  double train_artifact_max = 0.2;
  gan::TrainSchedule gan;
  gan::LsmHyperParams lsm_af{1.5, 1.5, spectral::AggregationFn::Mean};
  gan::LsmHyperParams lsm_nonaf{0.8, 3.0, spectral::AggregationFn::Max};
  eval::ClassifierSchedule classifier;
  std::vector<AugmentMethod> methods{kAllAugmentMethods.begin(), kAllAugmentMethods.end()};
  std::vector<std::size_t> ladder{2000, 4000, 8000, 16000};
  std::size_t jobs = 1;

  /// Sets the desk-scale training budgets.
  ExperimentConfig();
};

void validate(const ExperimentConfig& config);

// JSON round trips for configuration files and run manifests. Missing keys
// keep the values of the base argument; unknown keys raise ConfigError.
nlohmann::json to_json(const gan::TrainSchedule& sched);
gan::TrainSchedule schedule_from_json(const nlohmann::json& j, gan::TrainSchedule base = {});
nlohmann::json to_json(const eval::ClassifierSchedule& sched);
eval::ClassifierSchedule classifier_schedule_from_json(const nlohmann::json& j,
                                                       eval::ClassifierSchedule base = {});
nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base = {});

struct Corpora {
  std::vector<Record> train;
  std::vector<Record> test;
};

/// Gives each record, with probability `share`, an artifact covering a
/// uniform fraction in [0.02, max_fraction] (the Low group).
void add_mild_artifacts(std::vector<Record>& records, double share, double max_fraction,
                        std::uint64_t seed);

/// Within each class, records rotate through Clean, Low, Mid and High
/// artifact fractions in order of appearance.
void spread_quality_groups(std::vector<Record>& records, std::uint64_t seed);

/// Simulates and preprocesses the training corpus and the shifted test
/// corpus. Test records are spread evenly over the four quality groups.
Corpora build_corpora(const ExperimentConfig& config);

/// Trains each (method, class) generator at most once, on demand.
/// Thread-safe; results depend only on the configuration.
class GeneratorBank {
 public:
  GeneratorBank(const ExperimentConfig& config, const std::vector<Record>& train,
                std::filesystem::path log_dir = {});

  const nn::Generator<float>& get(AugmentMethod method, RhythmClass c);

 private:
  struct Entry {
    std::once_flag once;
    std::unique_ptr<gan::TrainResult> result;
  };

  const ExperimentConfig& config_;
  const std::vector<Record>& train_;
  std::filesystem::path log_dir_;
  std::mutex mutex_;
  std::map<std::pair<AugmentMethod, RhythmClass>, std::unique_ptr<Entry>> entries_;
};

struct MethodOutcome {
  AugmentMethod method = AugmentMethod::Original;
  std::size_t train_af = 0;
  std::size_t train_nonaf = 0;
  eval::ConfusionMatrix cm;
  eval::MetricsReport metrics;
  std::vector<int> predictions;
  std::size_t best_epoch = 0;
};

struct Experiment1Result {
  std::vector<MethodOutcome> rows;
  std::uint64_t test_hash = 0;
};

/// Rebalances AF to parity with each method, trains one classifier per
/// method and evaluates it on the shared test corpus. With a non-empty
/// out_dir, training logs and checkpoints are written below it.
Experiment1Result run_experiment1(const ExperimentConfig& config, const Corpora& corpora,
                                  GeneratorBank& bank, const std::filesystem::path& out_dir = {});

struct GroupScore {
  AugmentMethod method = AugmentMethod::Original;
  eval::QualityGroup group = eval::QualityGroup::Clean;
  std::size_t n = 0;
  eval::ConfusionMatrix cm;
  std::optional<double> f1;
};

/// Per-group F1 of the Experiment-1 classifiers.
std::vector<GroupScore> run_experiment2(const Experiment1Result& exp1, const Corpora& corpora);

struct CurvePoint {
  AugmentMethod method = AugmentMethod::Original;
  std::size_t size = 0;
  /// Empty for Original when the size exceeds the real data.
  bool applicable = true;
  eval::ConfusionMatrix overall;
  std::array<eval::ConfusionMatrix, 4> by_group{};
};

/// Balanced per-class corpus of size/2 records each: a seeded subsample
/// where enough real records exist, otherwise all real records plus
/// records from the method. Empty for Original when it cannot grow.
std::optional<std::vector<Record>> ladder_corpus(const ExperimentConfig& config,
                                                 const std::vector<Record>& train,
                                                 AugmentMethod method, std::size_t size,
                                                 GeneratorBank& bank);

std::vector<CurvePoint> run_experiment3(const ExperimentConfig& config, const Corpora& corpora,
                                        GeneratorBank& bank, const std::filesystem::path& out_dir = {});

// CSV writers. Floats carry 6 significant digits; undefined metrics are NA.
void write_experiment1_csv(const std::filesystem::path& path, const Experiment1Result& result);
void write_experiment2_csv(const std::filesystem::path& path, const std::vector<GroupScore>& scores);
/// method,size,group,n,f1 with group "All" for the whole test corpus.
void write_experiment3_csv(const std::filesystem::path& path, const std::vector<CurvePoint>& points);

}  // namespace lsmgan::experiments
