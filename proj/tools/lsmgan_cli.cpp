// lsmgan: command-line runner for corpus generation, preprocessing, GAN
// training, hyperparameter search, augmentation, classification,
// experiments and plots.
//
// Settings resolve in three layers: built-in defaults, the matching section
// of the --config JSON file, then flags. The resolved settings are written
// to <out>/manifest.json. Failures print one JSON error record on stderr.

#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lsmgan/ad/checkpoint.hpp"
#include "lsmgan/augment.hpp"
#include "lsmgan/classifier.hpp"
#include "lsmgan/corpus_io.hpp"
#include "lsmgan/error.hpp"
#include "lsmgan/eval.hpp"
#include "lsmgan/experiments.hpp"
#include "lsmgan/gan.hpp"
#include "lsmgan/hyperopt.hpp"
#include "lsmgan/platform.hpp"
#include "lsmgan/ppgsim.hpp"
#include "lsmgan/report.hpp"
#include "lsmgan/rng.hpp"
#include "lsmgan/simd/kernels.hpp"

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace lsmgan;

constexpr const char* kVersion = "0.1.0";

enum class Kind { Int, Real, Text, Switch };

struct Param {
  std::string flag;
  json::json_pointer pointer;
  Kind kind;
  std::string text;
  bool on = false;
  CLI::Option* option = nullptr;
};

struct Global {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> jobs;
  std::string backend = "auto";
};

struct Context {
  json cfg;
  std::uint64_t seed = 0;
  fs::path out;
  std::size_t jobs = 1;
};

struct Command {
  std::string name;
  CLI::App* app = nullptr;
  json defaults;
  std::deque<Param> params;
  std::function<void(Context&)> run;
};

Command& add_command(CLI::App& app, std::deque<Command>& commands, const std::string& name,
                     const std::string& help, json defaults) {
  commands.push_back({name, app.add_subcommand(name, help), std::move(defaults), {}, {}});
  return commands.back();
}

// Registers --<flag> bound to the JSON pointer inside the command section.
void param(Command& cmd, const std::string& flag, const std::string& pointer, Kind kind,
           const std::string& help) {
  cmd.params.push_back({flag, json::json_pointer(pointer), kind, {}, false, nullptr});
  Param& p = cmd.params.back();
  if (kind == Kind::Switch)
    p.option = cmd.app->add_flag("--" + flag, p.on, help);
  else
    p.option = cmd.app->add_option("--" + flag, p.text, help);
}

json flag_value(const Param& p) {
  try {
    switch (p.kind) {
      case Kind::Int: {
        std::size_t used = 0;
        const auto v = std::stoull(p.text, &used);
        if (used != p.text.size() || p.text.front() == '-') throw std::invalid_argument(p.text);
        return v;
      }
      case Kind::Real: {
        std::size_t used = 0;
        const double v = std::stod(p.text, &used);
        if (used != p.text.size()) throw std::invalid_argument(p.text);
        return v;
      }
      case Kind::Text: return p.text;
      case Kind::Switch: return p.on;
    }
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::ConfigError, "invalid value '" + p.text + "' for --" + p.flag);
  }
  return nullptr;
}

json read_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read config " + path);
  try {
    json j = json::parse(in);
    if (!j.is_object()) throw Error(ErrorCode::ConfigError, "config root must be an object");
    return j;
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, std::string("config parse error: ") + e.what());
  }
}

// defaults <- file section <- flags. Unknown keys in the file section are
// rejected by the typed parsers downstream.
Context resolve(const Command& cmd, const Global& g, const json& file) {
  Context ctx;
  ctx.cfg = cmd.defaults;
  if (file.contains(cmd.name)) ctx.cfg.merge_patch(file.at(cmd.name));
  for (const auto& p : cmd.params)
    if (p.option->count() > 0) ctx.cfg[p.pointer] = flag_value(p);

  if (g.seed) {
    ctx.seed = *g.seed;
  } else if (file.contains("seed")) {
    ctx.seed = file.at("seed").get<std::uint64_t>();
  } else {
    throw Error(ErrorCode::ConfigError, "a seed is required (--seed or \"seed\" in the config file)");
  }
  if (g.jobs)
    ctx.jobs = *g.jobs;
  else if (file.contains("jobs"))
    ctx.jobs = file.at("jobs").get<std::size_t>();
  if (ctx.jobs == 0) throw Error(ErrorCode::ConfigError, "--jobs must be at least 1");
  std::string out = g.out;
  if (out.empty() && file.contains("out")) out = file.at("out").get<std::string>();
  if (out.empty()) throw Error(ErrorCode::ConfigError, "an output directory is required (--out)");
  ctx.out = out;
  return ctx;
}

template <class T>
T get(const json& cfg, const char* key) {
  try {
    return cfg.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("setting '") + key + "': " + e.what());
  }
}

// Rejects file keys the command does not know about.
void check_keys(const json& cfg, const json& defaults) {
  for (const auto& item : cfg.items())
    if (!defaults.contains(item.key()))
      throw Error(ErrorCode::ConfigError, "unknown setting '" + item.key() + "'");
}

fs::path required_path(const json& cfg, const char* key) {
  const auto p = get<std::string>(cfg, key);
  if (p.empty()) throw Error(ErrorCode::ConfigError, std::string("--") + key + " is required");
  return p;
}

// Corpus and checkpoint inputs are passed as stems; <stem>.json must exist.
fs::path existing_stem(const json& cfg, const char* key) {
  fs::path stem = required_path(cfg, key);
  fs::path meta = stem;
  meta += ".json";
  if (!fs::exists(meta)) throw Error(ErrorCode::IoError, "missing input " + meta.string());
  return stem;
}

std::vector<dsp::Record> records_of(const std::vector<dsp::Record>& records, RhythmClass c) {
  std::vector<dsp::Record> out;
  for (const auto& r : records)
    if (r.label == c) out.push_back(r);
  return out;
}

nn::Generator<float> load_generator(const fs::path& stem) {
  fs::path meta_path = stem;
  meta_path += ".json";
  std::ifstream in(meta_path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + meta_path.string());
  const json meta = json::parse(in);
  const std::string kind = meta.value("kind", "");
  const std::string prefix = "generator:";
  if (kind.rfind(prefix, 0) != 0)
    throw Error(ErrorCode::IoError, meta_path.string() + " is not a generator checkpoint");
  nn::Generator<float> gen(nn::parse_generator_kind(kind.substr(prefix.size())), 0);
  ad::load_checkpoint(stem, gen.named_parameters());
  return gen;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void write_manifest(const Context& ctx, const std::string& command, const std::vector<std::string>& argv) {
  json m;
  m["tool"] = "lsmgan";
  m["version"] = kVersion;
  m["command"] = command;
  m["argv"] = argv;
  m["seed"] = ctx.seed;
  m["jobs"] = ctx.jobs;
  m["config"] = ctx.cfg;
  m["simd_backend"] = std::string(simd::to_string(simd::active_backend()));
  m["compiler"] = __VERSION__;
  m["libraries"] = {{"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                          std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                          std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                    {"CLI11", CLI11_VERSION}};
  write_json(ctx.out / "manifest.json", m);
}

void write_metrics_csv(const fs::path& path, const eval::ConfusionMatrix& cm) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  const auto m = eval::metrics(cm);
  out << "tp,fp,tn,fn,accuracy,sensitivity,specificity,ppv,npv,f1\n"
      << cm.tp << ',' << cm.fp << ',' << cm.tn << ',' << cm.fn;
  for (const auto* v : {&m.accuracy, &m.sensitivity, &m.specificity, &m.ppv, &m.npv, &m.f1})
    out << ',' << eval::format_metric(*v);
  out << '\n';
}

// ---- commands ---------------------------------------------------------------

void run_gen_corpus(Context& ctx) {
  const json& c = ctx.cfg;
  ppgsim::SimConfig af = ppgsim::default_config(RhythmClass::AF);
  ppgsim::SimConfig nonaf = ppgsim::default_config(RhythmClass::NonAF);
  for (auto* s : {&af, &nonaf}) {
    s->mean_hr_bpm = get<double>(c, "mean_hr_bpm");
    s->hr_spread_bpm = get<double>(c, "hr_spread_bpm");
    s->noise_std = get<double>(c, "noise_std");
    s->baseline_wander_amp = get<double>(c, "baseline_wander_amp");
    s->duration_s = get<double>(c, "duration_s");
  }
  af.rr_cv = get<double>(c, "af_rr_cv");
  nonaf.rr_cv = get<double>(c, "nonaf_rr_cv");
  af.seed = derive_seed(ctx.seed, static_cast<std::uint64_t>(RhythmClass::AF));
  nonaf.seed = derive_seed(ctx.seed, static_cast<std::uint64_t>(RhythmClass::NonAF));
  const auto corpus =
      ppgsim::generate_corpus(get<std::size_t>(c, "n_af"), get<std::size_t>(c, "n_nonaf"), af, nonaf);
  corpus::save_raw(ctx.out / "corpus", corpus);
}

void run_preprocess(Context& ctx) {
  const auto raw = corpus::load_raw(existing_stem(ctx.cfg, "input"));
  std::vector<dsp::Record> records;
  for (const auto& s : raw) {
    auto part = dsp::preprocess(s.signal, s.label);
    records.insert(records.end(), part.begin(), part.end());
  }
  const auto mode = get<std::string>(ctx.cfg, "artifacts");
  if (mode == "mild") {
    experiments::add_mild_artifacts(records, get<double>(ctx.cfg, "artifact_share"),
                                    get<double>(ctx.cfg, "artifact_max"), derive_seed(ctx.seed, 1));
  } else if (mode == "groups") {
    experiments::spread_quality_groups(records, derive_seed(ctx.seed, 2));
  } else if (mode != "none") {
    throw Error(ErrorCode::ConfigError, "artifacts must be none, mild or groups");
  }
  corpus::save_records(ctx.out / "records", records);
}

gan::LsmHyperParams hp_of(const json& c) {
  gan::LsmHyperParams hp{get<double>(c, "lambda1"), get<double>(c, "lambda2"),
                         gan::parse_aggregation(get<std::string>(c, "f"))};
  gan::validate(hp);
  return hp;
}

void run_train_gan(Context& ctx) {
  const json& c = ctx.cfg;
  const auto records = corpus::load_records(existing_stem(c, "input"));
  const RhythmClass cls = parse_rhythm_class(get<std::string>(c, "class"));
  const AugmentMethod method = parse_augment_method(get<std::string>(c, "method"));
  if (!is_gan_method(method))
    throw Error(ErrorCode::ConfigError, std::string(to_string(method)) + " is not a GAN method");
  const auto recipe = gan::recipe_for(method);
  gan::TrainSchedule sched = experiments::schedule_from_json(c.at("gan"));
  sched.seed = ctx.seed;
  std::optional<gan::LsmHyperParams> hp;
  if (recipe.loss == gan::GanLossKind::Lsm) hp = hp_of(c);
  const auto result = gan::train_gan(records_of(records, cls), recipe.kind, recipe.loss, hp, sched);
  ad::save_checkpoint(ctx.out / "generator", result.generator.named_parameters(),
                      "generator:" + std::string(nn::to_string(recipe.kind)));
  gan::write_training_log(ctx.out / "training_log.csv", result.log);
  write_json(ctx.out / "training_summary.json",
             {{"best_epoch", result.best_epoch},
              {"epochs_run", result.log.size()},
              {"stopped_early", result.stopped_early}});
}

void run_hyperopt(Context& ctx) {
  const json& c = ctx.cfg;
  const auto records = corpus::load_records(existing_stem(c, "input"));
  const auto pool = records_of(records, parse_rhythm_class(get<std::string>(c, "class")));
  hyperopt::GridSpec spec = get<bool>(c, "coarse") ? hyperopt::coarse_grid() : hyperopt::fine_grid();
  spec.k = get<std::size_t>(c, "k");
  spec.max_lag = get<std::size_t>(c, "max_lag");
  const auto mode = get<std::string>(c, "mode");
  hyperopt::GridResult result;
  if (mode == "stub") {
    result = hyperopt::grid_search(spec, pool, hyperopt::permutation_stub(pool), ctx.seed, ctx.jobs);
  } else if (mode == "train") {
    gan::TrainSchedule sched = experiments::schedule_from_json(c.at("gan"));
    sched.seed = derive_seed(ctx.seed, 1);
    hyperopt::TrainingSource source(pool, nn::GeneratorKind::SameLength1200, sched);
    result = hyperopt::grid_search(
        spec, pool, [&source](const auto& hp, std::size_t k, std::uint64_t s) { return source(hp, k, s); },
        ctx.seed, ctx.jobs);
  } else {
    throw Error(ErrorCode::ConfigError, "mode must be train or stub");
  }
  hyperopt::write_scores_csv(ctx.out / "scores.csv", result);
  hyperopt::write_summary(ctx.out / "best.json", result, spec);
}

void run_augment(Context& ctx) {
  const json& c = ctx.cfg;
  const auto records = corpus::load_records(existing_stem(c, "input"));
  const AugmentMethod method = parse_augment_method(get<std::string>(c, "method"));
  augment::ClassTargets targets{get<std::size_t>(c, "target_af"), get<std::size_t>(c, "target_nonaf")};
  if (targets.af == 0) targets.af = augment::count_class(records, RhythmClass::AF);
  if (targets.nonaf == 0) targets.nonaf = augment::count_class(records, RhythmClass::NonAF);
  std::map<RhythmClass, nn::Generator<float>> loaded;
  augment::GeneratorSet gens;
  for (auto [cls, key] : {std::pair{RhythmClass::AF, "generator_af"}, std::pair{RhythmClass::NonAF, "generator_nonaf"}}) {
    const auto stem = get<std::string>(c, key);
    if (stem.empty()) continue;
    loaded.emplace(cls, load_generator(stem));
    gens[cls] = &loaded.at(cls);
  }
  corpus::save_records(ctx.out / "records",
                       augment::augment_corpus(records, method, targets, gens, ctx.seed));
}

void run_train_clf(Context& ctx) {
  const auto records = corpus::load_records(existing_stem(ctx.cfg, "input"));
  eval::ClassifierSchedule sched = experiments::classifier_schedule_from_json(ctx.cfg.at("classifier"));
  sched.seed = ctx.seed;
  const auto clf = eval::train_classifier(records, sched);
  eval::save_classifier(ctx.out / "classifier", clf);
  eval::write_classifier_log(ctx.out / "classifier_log.csv", clf.log);
}

void run_evaluate(Context& ctx) {
  const auto clf = eval::load_classifier(existing_stem(ctx.cfg, "classifier"));
  const auto test = corpus::load_records(existing_stem(ctx.cfg, "input"));
  eval::check_leakage(test, clf.fingerprints);
  const auto predictions = eval::predict(clf.net, test);
  write_metrics_csv(ctx.out / "metrics.csv", eval::confusion(test, predictions));
  std::vector<experiments::GroupScore> scores;
  const auto groups = eval::confusion_by_group(test, predictions);
  for (std::size_t g = 0; g < groups.size(); ++g)
    scores.push_back({AugmentMethod::Original, eval::kAllQualityGroups[g], groups[g].total(), groups[g],
                      eval::metrics(groups[g]).f1});
  std::ofstream out(ctx.out / "groups.csv");
  if (!out) throw Error(ErrorCode::IoError, "cannot write groups.csv");
  out << "group,n,tp,fp,tn,fn,f1\n";
  for (const auto& s : scores)
    out << eval::to_string(s.group) << ',' << s.n << ',' << s.cm.tp << ',' << s.cm.fp << ','
        << s.cm.tn << ',' << s.cm.fn << ',' << eval::format_metric(s.f1) << '\n';
}

void run_experiment(Context& ctx, int which) {
  json cfg = ctx.cfg;
  cfg["seed"] = ctx.seed;
  cfg["jobs"] = ctx.jobs;
  const auto config = experiments::config_from_json(cfg);
  experiments::validate(config);
  ctx.cfg = experiments::to_json(config);

  const auto corpora = experiments::build_corpora(config);
  experiments::GeneratorBank bank(config, corpora.train, ctx.out / "gans");
  json summary{{"experiment", which},
               {"train_records", corpora.train.size()},
               {"test_records", corpora.test.size()},
               {"test_corpus_hash", corpus::corpus_hash(corpora.test)}};
  if (which == 1 || which == 2) {
    const auto exp1 = experiments::run_experiment1(config, corpora, bank, ctx.out);
    experiments::write_experiment1_csv(ctx.out / "experiment1.csv", exp1);
    if (which == 2)
      experiments::write_experiment2_csv(ctx.out / "experiment2.csv",
                                         experiments::run_experiment2(exp1, corpora));
  } else {
    const auto points = experiments::run_experiment3(config, corpora, bank, ctx.out);
    experiments::write_experiment3_csv(ctx.out / "experiment3.csv", points);
  }
  write_json(ctx.out / "summary.json", summary);
}

void run_report(Context& ctx) {
  const fs::path run = required_path(ctx.cfg, "run");
  if (!fs::is_directory(run)) throw Error(ErrorCode::IoError, "run directory " + run.string() + " not found");
  json written = json::array();
  for (const auto& p : report::generate_report(run, ctx.out)) written.push_back(p.filename().string());
  write_json(ctx.out / "report.json", {{"plots", written}});
}

void print_error(const std::string& command, const std::string& code, const std::string& message) {
  json record{{"status", "error"}, {"command", command}, {"code", code}, {"message", message}};
  std::cerr << record.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  CLI::App app{"LSM-GAN pulse-waveform augmentation pipeline"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", kVersion);

  Global g;
  app.add_option("--config", g.config_path, "JSON file with one section per command");
  app.add_option("--seed", g.seed, "Root seed (required here or in the config file)");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--jobs", g.jobs, "Maximum concurrent workers");
  app.add_option("--backend", g.backend, "SIMD kernels: auto, scalar or avx2");

  std::deque<Command> commands;

  auto& gen = add_command(app, commands, "gen-corpus", "Simulate a raw 240 Hz labeled corpus",
                          {{"n_af", 100},
                           {"n_nonaf", 700},
                           {"mean_hr_bpm", 80.0},
                           {"hr_spread_bpm", 8.0},
                           {"noise_std", 0.03},
                           {"baseline_wander_amp", 0.1},
                           {"duration_s", 30.0},
                           {"af_rr_cv", 0.25},
                           {"nonaf_rr_cv", 0.02}});
  param(gen, "n-af", "/n_af", Kind::Int, "AF records");
  param(gen, "n-nonaf", "/n_nonaf", Kind::Int, "NonAF records");
  param(gen, "mean-hr-bpm", "/mean_hr_bpm", Kind::Real, "Mean heart rate");
  param(gen, "hr-spread-bpm", "/hr_spread_bpm", Kind::Real, "Per-record heart-rate spread");
  param(gen, "noise-std", "/noise_std", Kind::Real, "White-noise standard deviation");
  param(gen, "baseline-wander-amp", "/baseline_wander_amp", Kind::Real, "Baseline wander amplitude");
  param(gen, "duration-s", "/duration_s", Kind::Real, "Signal duration in seconds");
  param(gen, "af-rr-cv", "/af_rr_cv", Kind::Real, "AF interval coefficient of variation");
  param(gen, "nonaf-rr-cv", "/nonaf_rr_cv", Kind::Real, "NonAF interval coefficient of variation");
  gen.run = run_gen_corpus;

  auto& pre = add_command(app, commands, "preprocess", "Decimate, filter, segment and normalize",
                          {{"input", ""}, {"artifacts", "none"}, {"artifact_share", 0.2}, {"artifact_max", 0.2}});
  param(pre, "input", "/input", Kind::Text, "Raw corpus stem");
  param(pre, "artifacts", "/artifacts", Kind::Text, "none, mild or groups");
  param(pre, "artifact-share", "/artifact_share", Kind::Real, "Share of records given a mild artifact");
  param(pre, "artifact-max", "/artifact_max", Kind::Real, "Largest mild artifact fraction");
  pre.run = run_preprocess;

  const json gan_defaults = experiments::to_json(gan::TrainSchedule{});
  auto& tg = add_command(app, commands, "train-gan", "Train one generator on one class",
                         {{"input", ""},
                          {"class", "AF"},
                          {"method", "LsmGan"},
                          {"lambda1", 1.5},
                          {"lambda2", 1.5},
                          {"f", "Mean"},
                          {"gan", gan_defaults}});
  param(tg, "input", "/input", Kind::Text, "Record corpus stem");
  param(tg, "class", "/class", Kind::Text, "AF or NonAF");
  param(tg, "method", "/method", Kind::Text, "Dcgan100, Dcgan1200, Wdcgan100, Wdcgan1200 or LsmGan");
  param(tg, "lambda1", "/lambda1", Kind::Real, "Matching weight");
  param(tg, "lambda2", "/lambda2", Kind::Real, "Self-consistency weight");
  param(tg, "f", "/f", Kind::Text, "Mean or Max");
  param(tg, "batch-size", "/gan/batch_size", Kind::Int, "Batch size");
  param(tg, "lr", "/gan/lr", Kind::Real, "Initial learning rate");
  param(tg, "max-epochs", "/gan/max_epochs", Kind::Int, "Epoch budget");
  param(tg, "patience", "/gan/early_stop_patience", Kind::Int, "Early-stopping patience");
  param(tg, "n-blocks", "/gan/n_blocks", Kind::Int, "Blocks per signal");
  param(tg, "scale", "/gan/scale", Kind::Text, "Log or Linear");
  tg.run = run_train_gan;

  json hyper_gan = gan_defaults;
  hyper_gan["max_epochs"] = 10;
  auto& hy = add_command(app, commands, "hyperopt", "Grid search over (lambda1, lambda2, F)",
                         {{"input", ""},
                          {"class", "AF"},
                          {"coarse", false},
                          {"mode", "train"},
                          {"k", 300},
                          {"max_lag", 400},
                          {"gan", hyper_gan}});
  param(hy, "input", "/input", Kind::Text, "Record corpus stem");
  param(hy, "class", "/class", Kind::Text, "AF or NonAF");
  param(hy, "coarse", "/coarse", Kind::Switch, "Step 0.5 instead of 0.1");
  param(hy, "mode", "/mode", Kind::Text, "train or stub");
  param(hy, "k", "/k", Kind::Int, "Signals per set");
  param(hy, "max-lag", "/max_lag", Kind::Int, "Autocorrelation lags");
  param(hy, "max-epochs", "/gan/max_epochs", Kind::Int, "Epoch budget per combination");
  hy.run = run_hyperopt;

  auto& au = add_command(app, commands, "augment", "Grow classes to target counts",
                         {{"input", ""},
                          {"method", "DataCopying"},
                          {"target_af", 0},
                          {"target_nonaf", 0},
                          {"generator_af", ""},
                          {"generator_nonaf", ""}});
  param(au, "input", "/input", Kind::Text, "Record corpus stem");
  param(au, "method", "/method", Kind::Text, "Augmentation method");
  param(au, "target-af", "/target_af", Kind::Int, "AF target (0 keeps the current count)");
  param(au, "target-nonaf", "/target_nonaf", Kind::Int, "NonAF target (0 keeps the current count)");
  param(au, "generator-af", "/generator_af", Kind::Text, "AF generator checkpoint stem");
  param(au, "generator-nonaf", "/generator_nonaf", Kind::Text, "NonAF generator checkpoint stem");
  au.run = run_augment;

  auto& tc = add_command(app, commands, "train-clf", "Train the AF detector",
                         {{"input", ""}, {"classifier", experiments::to_json(eval::ClassifierSchedule{})}});
  param(tc, "input", "/input", Kind::Text, "Record corpus stem");
  param(tc, "max-batch", "/classifier/max_batch", Kind::Int, "Largest batch size");
  param(tc, "lr", "/classifier/lr", Kind::Real, "Learning rate");
  param(tc, "patience", "/classifier/patience", Kind::Int, "Early-stopping patience");
  param(tc, "max-epochs", "/classifier/max_epochs", Kind::Int, "Epoch budget");
  tc.run = run_train_clf;

  auto& ev = add_command(app, commands, "evaluate", "Score a classifier on a held-out corpus",
                         {{"classifier", ""}, {"input", ""}});
  param(ev, "classifier", "/classifier", Kind::Text, "Classifier checkpoint stem");
  param(ev, "input", "/input", Kind::Text, "Test record corpus stem");
  ev.run = run_evaluate;

  int which = 0;
  json exp_defaults = experiments::to_json(experiments::ExperimentConfig{});
  exp_defaults.erase("seed");
  exp_defaults.erase("jobs");
  auto& ex = add_command(app, commands, "experiment", "Run experiment 1, 2 or 3", exp_defaults);
  ex.app->add_option("which", which, "1, 2 or 3")->required()->check(CLI::Range(1, 3));
  param(ex, "train-af", "/train_af", Kind::Int, "Training AF records");
  param(ex, "train-nonaf", "/train_nonaf", Kind::Int, "Training NonAF records");
  param(ex, "test-af", "/test_af", Kind::Int, "Test AF records");
  param(ex, "test-nonaf", "/test_nonaf", Kind::Int, "Test NonAF records");
  param(ex, "gan-max-epochs", "/gan/max_epochs", Kind::Int, "GAN epoch budget");
  param(ex, "clf-max-epochs", "/classifier/max_epochs", Kind::Int, "Classifier epoch budget");
  ex.run = [&which](Context& ctx) { run_experiment(ctx, which); };

  auto& rp = add_command(app, commands, "report", "SVG charts for an experiment run directory",
                         {{"run", ""}});
  param(rp, "run", "/run", Kind::Text, "Experiment run directory");
  rp.run = run_report;

  std::vector<std::string> args(argv, argv + argc);
  std::string command_name = "lsmgan";
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error(command_name, std::string(to_string(ErrorCode::ConfigError)), e.what());
    return 2;
  }

  for (auto& cmd : commands) {
    if (!cmd.app->parsed()) continue;
    command_name = cmd.name;
    try {
      if (g.backend == "scalar") simd::set_backend(simd::Backend::Scalar);
      else if (g.backend == "avx2") simd::set_backend(simd::Backend::Avx2);
      else if (g.backend != "auto") throw Error(ErrorCode::ConfigError, "backend must be auto, scalar or avx2");
      const json file = read_config_file(g.config_path);
      Context ctx = resolve(cmd, g, file);
      if (cmd.name != "experiment") check_keys(ctx.cfg, cmd.defaults);
      fs::create_directories(ctx.out);
      cmd.run(ctx);
      write_manifest(ctx, cmd.name, args);
      return 0;
    } catch (const Error& e) {
      print_error(command_name, std::string(to_string(e.code())), e.what());
      return e.code() == ErrorCode::ConfigError ? 2 : 1;
    } catch (const fs::filesystem_error& e) {
      print_error(command_name, std::string(to_string(ErrorCode::IoError)), e.what());
      return 1;
    } catch (const std::exception& e) {
      print_error(command_name, "InternalError", e.what());
      return 1;
    }
  }
  return 0;
}
