#include "lsmgan/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "lsmgan/ad/adam.hpp"
#include "lsmgan/ad/checkpoint.hpp"
#include "lsmgan/ad/ops.hpp"
#include "lsmgan/corpus_io.hpp"
#include "lsmgan/error.hpp"
#include "lsmgan/gan.hpp"
#include "lsmgan/rng.hpp"

namespace lsmgan::eval {

std::size_t classifier_batch_size(const ClassifierSchedule& sched, std::size_t corpus_size) {
  return std::max<std::size_t>(2, std::min(sched.max_batch, corpus_size / 4));
}

namespace {

ad::Var<float> stack(const std::vector<dsp::Record>& records, std::span<const std::size_t> idx) {
  std::vector<float> data(idx.size() * nn::kSignalLength);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto& s = records[idx[i]].samples;
    if (s.size() != nn::kSignalLength)
      throw Error(ErrorCode::ShapeMismatch, "records must have 1200 samples");
    std::transform(s.begin(), s.end(), data.begin() + i * nn::kSignalLength,
                   [](double v) { return static_cast<float>(v); });
  }
  return ad::constant<float>({idx.size(), nn::kSignalLength}, std::move(data));
}

std::vector<int> labels_of(const std::vector<dsp::Record>& records,
                           std::span<const std::size_t> idx) {
  std::vector<int> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i)
    out[i] = records[idx[i]].label == RhythmClass::AF ? 1 : 0;
  return out;
}

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};

Evaluation evaluate_split(const nn::Classifier<float>& net, const std::vector<dsp::Record>& records,
                          const std::vector<std::size_t>& idx, std::size_t batch) {
  double loss = 0.0;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < idx.size(); start += batch) {
    std::span<const std::size_t> chunk(idx.data() + start, std::min(batch, idx.size() - start));
    const auto labels = labels_of(records, chunk);
    const auto logits = net.forward(stack(records, chunk));
    const auto ce = ad::softmax_cross_entropy(ad::detach(logits), std::span<const int>(labels));
    loss += static_cast<double>(ce->value[0]) * static_cast<double>(chunk.size());
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      const int pred = logits->value[2 * i + 1] > logits->value[2 * i] ? 1 : 0;
      correct += pred == labels[i];
    }
  }
  const auto n = static_cast<double>(idx.size());
  return {loss / n, static_cast<double>(correct) / n};
}

}  // namespace

TrainedClassifier train_classifier(const std::vector<dsp::Record>& corpus,
                                   const ClassifierSchedule& sched) {
  if (sched.patience < 1 || sched.max_batch < 2 || !(sched.lr > 0))
    throw Error(ErrorCode::InvalidConfig, "invalid classifier schedule");
  std::size_t n_af = 0;
  for (const auto& r : corpus) n_af += r.label == RhythmClass::AF;
  if (n_af == 0 || n_af == corpus.size())
    throw Error(ErrorCode::SingleClassCorpus, "training corpus needs both classes");
  if (corpus.size() < 4) throw Error(ErrorCode::InsufficientData, "need at least 4 records");

  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng(derive_seed(sched.seed, 1));
  split_rng.shuffle(std::span<std::size_t>(order));
  const std::size_t n_val = std::max<std::size_t>(1, corpus.size() / 10);
  const std::vector<std::size_t> val_idx(order.begin(), order.begin() + n_val);
  std::vector<std::size_t> train_idx(order.begin() + n_val, order.end());

  TrainedClassifier out;
  out.net = nn::Classifier<float>(derive_seed(sched.seed, 2));
  for (const auto& r : corpus) out.fingerprints.insert(corpus::fingerprint(r));
  const auto named = out.net.named_parameters();
  const auto params = nn::vars_of(named);
  ad::AdamState<float> opt;
  opt.lr = sched.lr;
  const std::size_t batch = classifier_batch_size(sched, corpus.size());

  double best = std::numeric_limits<double>::infinity();
  nn::ParamValues<float> best_values = nn::snapshot(named);
  std::size_t since_best = 0;
  for (std::size_t epoch = 0; epoch < sched.max_epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(derive_seed(sched.seed, 3), epoch));
    shuffle_rng.shuffle(std::span<std::size_t>(train_idx));
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < train_idx.size(); start += batch) {
      std::span<const std::size_t> chunk(train_idx.data() + start,
                                         std::min(batch, train_idx.size() - start));
      const auto labels = labels_of(corpus, chunk);
      auto loss = ad::softmax_cross_entropy(out.net.forward(stack(corpus, chunk)),
                                            std::span<const int>(labels));
      ad::backward(loss);
      ad::adam_step<float>(params, opt);
      loss_sum += static_cast<double>(loss->value[0]) * static_cast<double>(chunk.size());
      seen += chunk.size();
    }
    const Evaluation val = evaluate_split(out.net, corpus, val_idx, 256);
    out.log.push_back({epoch + 1, loss_sum / static_cast<double>(seen), val.loss, val.accuracy});
    if (val.loss < best) {
      best = val.loss;
      out.best_epoch = epoch + 1;
      best_values = nn::snapshot(named);
      since_best = 0;
    } else if (++since_best >= sched.patience) {
      out.stopped_early = true;
      break;
    }
  }
  nn::restore(named, best_values);
  return out;
}

std::vector<int> predict(const nn::Classifier<float>& net, const std::vector<dsp::Record>& records,
                         std::size_t batch) {
  std::vector<int> out;
  out.reserve(records.size());
  std::vector<std::size_t> idx(records.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t start = 0; start < idx.size(); start += batch) {
    std::span<const std::size_t> chunk(idx.data() + start, std::min(batch, idx.size() - start));
    const auto logits = net.forward(stack(records, chunk));
    for (std::size_t i = 0; i < chunk.size(); ++i)
      out.push_back(logits->value[2 * i + 1] > logits->value[2 * i] ? 1 : 0);
  }
  return out;
}

void write_classifier_log(const std::filesystem::path& path,
                          const std::vector<ClassifierEpoch>& log) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << "epoch,train_loss,val_loss,val_accuracy\n";
  for (const auto& e : log)
    out << e.epoch << ',' << gan::format_number(e.train_loss) << ','
        << gan::format_number(e.val_loss) << ',' << gan::format_number(e.val_accuracy) << '\n';
}

void save_classifier(const std::filesystem::path& stem, const TrainedClassifier& clf) {
  ad::save_checkpoint(stem, clf.net.named_parameters(), "classifier");
  std::vector<std::uint64_t> prints(clf.fingerprints.begin(), clf.fingerprints.end());
  std::sort(prints.begin(), prints.end());
  nlohmann::json j;
  j["best_epoch"] = clf.best_epoch;
  j["fingerprints"] = prints;
  std::ofstream out(stem.string() + ".train.json");
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + stem.string() + ".train.json");
  out << j.dump() << '\n';
}

TrainedClassifier load_classifier(const std::filesystem::path& stem) {
  TrainedClassifier clf;
  ad::load_checkpoint(stem, clf.net.named_parameters());
  std::ifstream in(stem.string() + ".train.json");
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + stem.string() + ".train.json");
  try {
    const auto j = nlohmann::json::parse(in);
    clf.best_epoch = j.at("best_epoch").get<std::size_t>();
    for (auto v : j.at("fingerprints")) clf.fingerprints.insert(v.get<std::uint64_t>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IoError, stem.string() + ".train.json: " + e.what());
  }
  return clf;
}

}  // namespace lsmgan::eval
