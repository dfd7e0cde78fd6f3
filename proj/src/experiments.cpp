#include "lsmgan/experiments.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>

#include "lsmgan/ad/checkpoint.hpp"
#include "lsmgan/augment.hpp"
#include "lsmgan/corpus_io.hpp"
#include "lsmgan/error.hpp"
#include "lsmgan/parallel.hpp"
#include "lsmgan/ppgsim.hpp"
#include "lsmgan/rng.hpp"

namespace lsmgan::experiments {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Stream : std::uint64_t {
  kTrainSim = 1,
  kTestSim,
  kTrainArtifacts,
  kTestArtifacts,
  kGan,
  kAugment,
  kClassifier,
  kSubsample,
};

constexpr std::array<std::pair<double, double>, 4> kGroupFractions = {
    {{0.0, 0.0}, {0.02, 0.2}, {0.22, 0.6}, {0.62, 0.95}}};

std::uint64_t stream_seed(std::uint64_t seed, Stream s, std::uint64_t sub = 0) {
  return derive_seed(derive_seed(seed, s), sub);
}

std::uint64_t method_class_key(AugmentMethod m, RhythmClass c) {
  return static_cast<std::uint64_t>(m) * 2 + static_cast<std::uint64_t>(c);
}

std::vector<Record> simulate(std::size_t n_af, std::size_t n_nonaf, double hr, double noise,
                             double af_rr_cv, std::uint64_t seed, std::size_t jobs) {
  ppgsim::SimConfig af = ppgsim::default_config(RhythmClass::AF);
  ppgsim::SimConfig nonaf = ppgsim::default_config(RhythmClass::NonAF);
  af.rr_cv = af_rr_cv;
  af.mean_hr_bpm = nonaf.mean_hr_bpm = hr;
  af.noise_std = nonaf.noise_std = noise;
  af.seed = derive_seed(seed, static_cast<std::uint64_t>(RhythmClass::AF));
  nonaf.seed = derive_seed(seed, static_cast<std::uint64_t>(RhythmClass::NonAF));
  ppgsim::validate(af, RhythmClass::AF);
  ppgsim::validate(nonaf, RhythmClass::NonAF);

  std::vector<Record> out(n_af + n_nonaf);
  parallel_for(out.size(), jobs, [&](std::size_t i) {
    const bool is_af = i < n_af;
    ppgsim::SimConfig c = is_af ? af : nonaf;
    c.seed += is_af ? i : i - n_af;
    const RhythmClass label = is_af ? RhythmClass::AF : RhythmClass::NonAF;
    auto records = dsp::preprocess(ppgsim::generate_record(label, c), label);
    if (records.empty()) throw Error(ErrorCode::SignalTooShort, "simulated signal yields no record");
    out[i] = std::move(records.front());
  });
  return out;
}

std::vector<std::size_t> indices_of(const std::vector<Record>& records, RhythmClass c) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (records[i].label == c) idx.push_back(i);
  return idx;
}

std::vector<Record> class_records(const std::vector<Record>& records, RhythmClass c) {
  std::vector<Record> out;
  for (const auto& r : records)
    if (r.label == c) out.push_back(r);
  return out;
}

std::optional<double> f1_of(const eval::ConfusionMatrix& cm) { return eval::metrics(cm).f1; }

std::ofstream open_csv(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  return out;
}

void write_cm(std::ostream& out, const eval::ConfusionMatrix& cm) {
  out << cm.tp << ',' << cm.fp << ',' << cm.tn << ',' << cm.fn;
}

template <class T>
void read_field(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const char* where) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, std::string(where) + " must be an object");
  std::set<std::string> names(known.begin(), known.end());
  for (const auto& item : j.items())
    if (!names.count(item.key()))
      throw Error(ErrorCode::ConfigError,
                  "unknown key '" + item.key() + "' in " + std::string(where));
}

json hp_json(const gan::LsmHyperParams& hp) {
  return {{"lambda1", hp.lambda1}, {"lambda2", hp.lambda2}, {"f", gan::to_string(hp.f)}};
}

gan::LsmHyperParams hp_from(const json& j, gan::LsmHyperParams hp, const char* where) {
  reject_unknown(j, {"lambda1", "lambda2", "f"}, where);
  read_field(j, "lambda1", hp.lambda1);
  read_field(j, "lambda2", hp.lambda2);
  if (j.contains("f")) hp.f = gan::parse_aggregation(j.at("f").get<std::string>());
  return hp;
}

}  // namespace

ExperimentConfig::ExperimentConfig() {
  gan.max_epochs = 30;
  classifier.max_epochs = 5;
}

void validate(const ExperimentConfig& c) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
  if (c.train_af == 0 || c.train_nonaf == 0) fail("training corpus needs both classes");
  if (c.test_af + c.test_nonaf == 0) fail("test corpus is empty");
  if (!(c.train_artifact_share >= 0.0 && c.train_artifact_share <= 1.0))
    fail("train_artifact_share must lie in [0, 1]");
  if (!(c.train_artifact_max > 0.02 && c.train_artifact_max <= 0.2))
    fail("train_artifact_max must lie in (0.02, 0.2]");
  gan::validate(c.gan);
  gan::validate(c.lsm_af);
  gan::validate(c.lsm_nonaf);
  if (c.methods.empty()) fail("no augmentation methods selected");
  std::set<AugmentMethod> seen(c.methods.begin(), c.methods.end());
  if (seen.size() != c.methods.size()) fail("duplicate augmentation method");
  for (std::size_t i = 0; i < c.ladder.size(); ++i) {
    if (c.ladder[i] < 4 || c.ladder[i] % 2 != 0) fail("ladder sizes must be even and >= 4");
    if (i > 0 && c.ladder[i] <= c.ladder[i - 1]) fail("ladder sizes must increase strictly");
  }
}

json to_json(const gan::TrainSchedule& s) {
  return {{"batch_size", s.batch_size},
          {"lr", s.lr},
          {"lr_decay_per_epoch", s.lr_decay_per_epoch},
          {"min_lr", s.min_lr},
          {"max_epochs", s.max_epochs},
          {"early_stop_patience", s.early_stop_patience},
          {"n_blocks", s.n_blocks},
          {"scale", gan::to_string(s.scale)},
          {"critic_steps", s.critic_steps},
          {"clip", s.clip}};
}

gan::TrainSchedule schedule_from_json(const json& g, gan::TrainSchedule s) {
  try {
    reject_unknown(g,
                   {"batch_size", "lr", "lr_decay_per_epoch", "min_lr", "max_epochs",
                    "early_stop_patience", "n_blocks", "scale", "critic_steps", "clip"},
                   "gan schedule");
    read_field(g, "batch_size", s.batch_size);
    read_field(g, "lr", s.lr);
    read_field(g, "lr_decay_per_epoch", s.lr_decay_per_epoch);
    read_field(g, "min_lr", s.min_lr);
    read_field(g, "max_epochs", s.max_epochs);
    read_field(g, "early_stop_patience", s.early_stop_patience);
    read_field(g, "n_blocks", s.n_blocks);
    if (g.contains("scale")) s.scale = gan::parse_spectrum_scale(g.at("scale").get<std::string>());
    read_field(g, "critic_steps", s.critic_steps);
    read_field(g, "clip", s.clip);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  return s;
}

json to_json(const eval::ClassifierSchedule& s) {
  return {{"max_batch", s.max_batch},
          {"lr", s.lr},
          {"patience", s.patience},
          {"max_epochs", s.max_epochs}};
}

eval::ClassifierSchedule classifier_schedule_from_json(const json& k, eval::ClassifierSchedule s) {
  try {
    reject_unknown(k, {"max_batch", "lr", "patience", "max_epochs"}, "classifier schedule");
    read_field(k, "max_batch", s.max_batch);
    read_field(k, "lr", s.lr);
    read_field(k, "patience", s.patience);
    read_field(k, "max_epochs", s.max_epochs);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  return s;
}

json to_json(const ExperimentConfig& c) {
  json methods = json::array();
  for (auto m : c.methods) methods.push_back(std::string(to_string(m)));
  return {
      {"seed", c.seed},
      {"train_af", c.train_af},
      {"train_nonaf", c.train_nonaf},
      {"test_af", c.test_af},
      {"test_nonaf", c.test_nonaf},
      {"train_hr_bpm", c.train_hr_bpm},
      {"train_noise_std", c.train_noise_std},
      {"test_hr_bpm", c.test_hr_bpm},
      {"test_noise_std", c.test_noise_std},
      {"test_af_rr_cv", c.test_af_rr_cv},
      {"train_artifact_share", c.train_artifact_share},
      {"train_artifact_max", c.train_artifact_max},
      {"gan", to_json(c.gan)},
      {"lsm_af", hp_json(c.lsm_af)},
      {"lsm_nonaf", hp_json(c.lsm_nonaf)},
      {"classifier", to_json(c.classifier)},
      {"methods", methods},
      {"ladder", c.ladder},
      {"jobs", c.jobs},
  };
}

ExperimentConfig config_from_json(const json& j, ExperimentConfig c) {
  try {
    reject_unknown(j,
                   {"seed", "train_af", "train_nonaf", "test_af", "test_nonaf", "train_hr_bpm",
                    "train_noise_std", "test_hr_bpm", "test_noise_std", "test_af_rr_cv",
                    "train_artifact_share", "train_artifact_max", "gan", "lsm_af", "lsm_nonaf", "classifier", "methods",
                    "ladder", "jobs"},
                   "experiment config");
    read_field(j, "seed", c.seed);
    read_field(j, "train_af", c.train_af);
    read_field(j, "train_nonaf", c.train_nonaf);
    read_field(j, "test_af", c.test_af);
    read_field(j, "test_nonaf", c.test_nonaf);
    read_field(j, "train_hr_bpm", c.train_hr_bpm);
    read_field(j, "train_noise_std", c.train_noise_std);
    read_field(j, "test_hr_bpm", c.test_hr_bpm);
    read_field(j, "test_noise_std", c.test_noise_std);
    read_field(j, "test_af_rr_cv", c.test_af_rr_cv);
    read_field(j, "train_artifact_share", c.train_artifact_share);
    read_field(j, "train_artifact_max", c.train_artifact_max);
    if (j.contains("gan")) c.gan = schedule_from_json(j.at("gan"), c.gan);
    if (j.contains("lsm_af")) c.lsm_af = hp_from(j.at("lsm_af"), c.lsm_af, "lsm_af");
    if (j.contains("lsm_nonaf")) c.lsm_nonaf = hp_from(j.at("lsm_nonaf"), c.lsm_nonaf, "lsm_nonaf");
    if (j.contains("classifier"))
      c.classifier = classifier_schedule_from_json(j.at("classifier"), c.classifier);
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& m : j.at("methods")) c.methods.push_back(parse_augment_method(m.get<std::string>()));
    }
    read_field(j, "ladder", c.ladder);
    read_field(j, "jobs", c.jobs);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  return c;
}

void add_mild_artifacts(std::vector<Record>& records, double share, double max_fraction,
                        std::uint64_t seed) {
  if (!(share >= 0.0 && share <= 1.0)) throw Error(ErrorCode::InvalidConfig, "share must lie in [0, 1]");
  if (!(max_fraction > 0.02 && max_fraction <= 0.2))
    throw Error(ErrorCode::InvalidConfig, "mild artifact fraction must lie in (0.02, 0.2]");
  Rng pick(seed);
  for (auto& r : records) {
    if (pick.uniform() >= share) continue;
    const double f = pick.uniform(0.02, max_fraction);
    r = dsp::inject_artifact(r, f, pick.next_u64());
  }
}

void spread_quality_groups(std::vector<Record>& records, std::uint64_t seed) {
  Rng rng(seed);
  std::array<std::size_t, 2> seen{};
  for (auto& r : records) {
    const std::size_t slot = seen[static_cast<std::size_t>(r.label)]++ % 4;
    const auto [lo, hi] = kGroupFractions[slot];
    const double f = rng.uniform(lo, hi);
    const std::uint64_t s = rng.next_u64();
    if (slot != 0) r = dsp::inject_artifact(r, f, s);
  }
}

Corpora build_corpora(const ExperimentConfig& config) {
  validate(config);
  Corpora out;
  out.train = simulate(config.train_af, config.train_nonaf, config.train_hr_bpm,
                       config.train_noise_std, ppgsim::default_config(RhythmClass::AF).rr_cv,
                       stream_seed(config.seed, kTrainSim), config.jobs);
  out.test = simulate(config.test_af, config.test_nonaf, config.test_hr_bpm, config.test_noise_std,
                      config.test_af_rr_cv,
                      stream_seed(config.seed, kTestSim), config.jobs);

  add_mild_artifacts(out.train, config.train_artifact_share, config.train_artifact_max,
                     stream_seed(config.seed, kTrainArtifacts));
  spread_quality_groups(out.test, stream_seed(config.seed, kTestArtifacts));
  return out;
}

GeneratorBank::GeneratorBank(const ExperimentConfig& config, const std::vector<Record>& train,
                             fs::path log_dir)
    : config_(config), train_(train), log_dir_(std::move(log_dir)) {}

const nn::Generator<float>& GeneratorBank::get(AugmentMethod method, RhythmClass c) {
  if (!is_gan_method(method))
    throw Error(ErrorCode::MissingGenerator,
                std::string(to_string(method)) + " does not use a generator");
  Entry* entry;
  {
    std::lock_guard lock(mutex_);
    auto& slot = entries_[{method, c}];
    if (!slot) slot = std::make_unique<Entry>();
    entry = slot.get();
  }
  std::call_once(entry->once, [&] {
    const auto recipe = gan::recipe_for(method);
    gan::TrainSchedule sched = config_.gan;
    sched.seed = stream_seed(config_.seed, kGan, method_class_key(method, c));
    std::optional<gan::LsmHyperParams> hp;
    if (recipe.loss == gan::GanLossKind::Lsm)
      hp = c == RhythmClass::AF ? config_.lsm_af : config_.lsm_nonaf;
    auto result = std::make_unique<gan::TrainResult>(
        gan::train_gan(class_records(train_, c), recipe.kind, recipe.loss, hp, sched));
    if (!log_dir_.empty()) {
      fs::create_directories(log_dir_);
      const std::string stem = std::string(to_string(method)) + "_" + std::string(to_string(c));
      gan::write_training_log(log_dir_ / (stem + ".csv"), result->log);
      ad::save_checkpoint(log_dir_ / stem, result->generator.named_parameters(),
                          "generator:" + std::string(nn::to_string(recipe.kind)));
    }
    entry->result = std::move(result);
  });
  return entry->result->generator;
}

Experiment1Result run_experiment1(const ExperimentConfig& config, const Corpora& corpora,
                                  GeneratorBank& bank, const fs::path& out_dir) {
  validate(config);
  const std::uint64_t reference = corpus::corpus_hash(corpora.test);
  const std::size_t n_af = augment::count_class(corpora.train, RhythmClass::AF);
  const std::size_t n_nonaf = augment::count_class(corpora.train, RhythmClass::NonAF);

  Experiment1Result result;
  result.test_hash = reference;
  result.rows.resize(config.methods.size());
  parallel_for(config.methods.size(), config.jobs, [&](std::size_t i) {
    const AugmentMethod method = config.methods[i];
    augment::GeneratorSet gens;
    augment::ClassTargets targets{std::max(n_af, n_nonaf), n_nonaf};
    if (method == AugmentMethod::Original) targets = {n_af, n_nonaf};
    if (is_gan_method(method)) gens[RhythmClass::AF] = &bank.get(method, RhythmClass::AF);
    const auto corpus = augment::augment_corpus(corpora.train, method, targets, gens,
                                                stream_seed(config.seed, kAugment, static_cast<std::uint64_t>(method)));

    eval::ClassifierSchedule sched = config.classifier;
    sched.seed = stream_seed(config.seed, kClassifier);
    const auto clf = eval::train_classifier(corpus, sched);

    if (corpus::corpus_hash(corpora.test) != reference)
      throw Error(ErrorCode::LeakageDetected, "test corpus changed between methods");
    eval::check_leakage(corpora.test, clf.fingerprints);

    MethodOutcome& row = result.rows[i];
    row.method = method;
    row.train_af = augment::count_class(corpus, RhythmClass::AF);
    row.train_nonaf = augment::count_class(corpus, RhythmClass::NonAF);
    row.predictions = eval::predict(clf.net, corpora.test);
    row.cm = eval::confusion(corpora.test, row.predictions);
    row.metrics = eval::metrics(row.cm);
    row.best_epoch = clf.best_epoch;

    if (!out_dir.empty()) {
      const fs::path dir = out_dir / "classifiers";
      fs::create_directories(dir);
      eval::write_classifier_log(dir / (std::string(to_string(method)) + ".csv"), clf.log);
      eval::save_classifier(dir / std::string(to_string(method)), clf);
    }
  });
  return result;
}

std::vector<GroupScore> run_experiment2(const Experiment1Result& exp1, const Corpora& corpora) {
  if (corpus::corpus_hash(corpora.test) != exp1.test_hash)
    throw Error(ErrorCode::InvalidConfig, "test corpus differs from the Experiment-1 run");
  std::vector<GroupScore> out;
  for (const auto& row : exp1.rows) {
    const auto groups = eval::confusion_by_group(corpora.test, row.predictions);
    for (std::size_t g = 0; g < groups.size(); ++g) {
      GroupScore s;
      s.method = row.method;
      s.group = eval::kAllQualityGroups[g];
      s.cm = groups[g];
      s.n = groups[g].total();
      s.f1 = f1_of(groups[g]);
      out.push_back(s);
    }
  }
  return out;
}

std::optional<std::vector<Record>> ladder_corpus(const ExperimentConfig& config,
                                                 const std::vector<Record>& train,
                                                 AugmentMethod method, std::size_t size,
                                                 GeneratorBank& bank) {
  const std::size_t per_class = size / 2;
  std::vector<Record> base;
  augment::ClassTargets targets{per_class, per_class};
  augment::GeneratorSet gens;
  bool grows = false;
  for (RhythmClass c : {RhythmClass::AF, RhythmClass::NonAF}) {
    auto idx = indices_of(train, c);
    if (idx.size() >= per_class) {
      // Same subsample for every method at this size.
      Rng rng(stream_seed(config.seed, kSubsample,
                          derive_seed(size, static_cast<std::uint64_t>(c))));
      rng.shuffle(std::span<std::size_t>(idx));
      idx.resize(per_class);
      std::sort(idx.begin(), idx.end());
    } else {
      grows = true;
      if (method == AugmentMethod::Original) return std::nullopt;
      if (is_gan_method(method)) gens[c] = &bank.get(method, c);
    }
    for (std::size_t i : idx) base.push_back(train[i]);
  }
  if (!grows) return base;
  return augment::augment_corpus(base, method, targets, gens,
                                 stream_seed(config.seed, kAugment,
                                             derive_seed(size, static_cast<std::uint64_t>(method))));
}

std::vector<CurvePoint> run_experiment3(const ExperimentConfig& config, const Corpora& corpora,
                                        GeneratorBank& bank, const fs::path& out_dir) {
  validate(config);
  const std::uint64_t reference = corpus::corpus_hash(corpora.test);
  std::vector<CurvePoint> points(config.methods.size() * config.ladder.size());
  parallel_for(points.size(), config.jobs, [&](std::size_t i) {
    CurvePoint& p = points[i];
    p.method = config.methods[i / config.ladder.size()];
    p.size = config.ladder[i % config.ladder.size()];
    const auto corpus = ladder_corpus(config, corpora.train, p.method, p.size, bank);
    if (!corpus) {
      p.applicable = false;
      return;
    }
    eval::ClassifierSchedule sched = config.classifier;
    sched.seed = stream_seed(config.seed, kClassifier, p.size);
    const auto clf = eval::train_classifier(*corpus, sched);
    if (corpus::corpus_hash(corpora.test) != reference)
      throw Error(ErrorCode::LeakageDetected, "test corpus changed between methods");
    eval::check_leakage(corpora.test, clf.fingerprints);
    const auto predictions = eval::predict(clf.net, corpora.test);
    p.overall = eval::confusion(corpora.test, predictions);
    p.by_group = eval::confusion_by_group(corpora.test, predictions);
    if (!out_dir.empty()) {
      const fs::path dir = out_dir / "classifiers";
      fs::create_directories(dir);
      eval::write_classifier_log(
          dir / (std::string(to_string(p.method)) + "_" + std::to_string(p.size) + ".csv"), clf.log);
    }
  });
  return points;
}

void write_experiment1_csv(const fs::path& path, const Experiment1Result& result) {
  auto out = open_csv(path);
  out << "method,train_af,train_nonaf,tp,fp,tn,fn,accuracy,sensitivity,specificity,ppv,npv,f1\n";
  for (const auto& row : result.rows) {
    out << to_string(row.method) << ',' << row.train_af << ',' << row.train_nonaf << ',';
    write_cm(out, row.cm);
    const auto& m = row.metrics;
    for (const auto* v : {&m.accuracy, &m.sensitivity, &m.specificity, &m.ppv, &m.npv, &m.f1})
      out << ',' << eval::format_metric(*v);
    out << '\n';
  }
}

void write_experiment2_csv(const fs::path& path, const std::vector<GroupScore>& scores) {
  auto out = open_csv(path);
  out << "method,group,n,tp,fp,tn,fn,f1\n";
  for (const auto& s : scores) {
    out << to_string(s.method) << ',' << eval::to_string(s.group) << ',' << s.n << ',';
    write_cm(out, s.cm);
    out << ',' << eval::format_metric(s.f1) << '\n';
  }
}

void write_experiment3_csv(const fs::path& path, const std::vector<CurvePoint>& points) {
  auto out = open_csv(path);
  out << "method,size,group,n,f1\n";
  for (const auto& p : points) {
    auto row = [&](std::string_view group, const eval::ConfusionMatrix& cm) {
      out << to_string(p.method) << ',' << p.size << ',' << group << ',';
      if (p.applicable)
        out << cm.total() << ',' << eval::format_metric(f1_of(cm)) << '\n';
      else
        out << "0,NA\n";
    };
    row("All", p.overall);
    for (std::size_t g = 0; g < 4; ++g) row(eval::to_string(eval::kAllQualityGroups[g]), p.by_group[g]);
  }
}

}  // namespace lsmgan::experiments
