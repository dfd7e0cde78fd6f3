#pragma once

// Training and inference for the residual AF detector.

#include <cstdint>
#include <filesystem>
#include <unordered_set>
#include <vector>

#include "lsmgan/dsp.hpp"
#include "lsmgan/nn.hpp"

namespace lsmgan::eval {

struct ClassifierSchedule {
  std::size_t max_batch = 512;
  double lr = 1e-3;
  std::size_t patience = 6;
  std::size_t max_epochs = 50;
  std::uint64_t seed = 0;
};

/// min(max_batch, corpus_size / 4), at least 2.
std::size_t classifier_batch_size(const ClassifierSchedule& sched, std::size_t corpus_size);

struct ClassifierEpoch {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainedClassifier {
  nn::Classifier<float> net{0};
  std::vector<ClassifierEpoch> log;
  std::size_t best_epoch = 0;
  bool stopped_early = false;
  /// Content fingerprints of every record the classifier was trained on.
  std::unordered_set<std::uint64_t> fingerprints;
};

/// Adam + cross-entropy on a seeded 90/10 split with early stopping on the
/// validation loss; the best-validation parameters are restored.
/// Throws SingleClassCorpus unless both classes are present.
TrainedClassifier train_classifier(const std::vector<dsp::Record>& corpus,
                                   const ClassifierSchedule& sched);

/// Class index per record (0 = NonAF, 1 = AF), argmax over the logits.
std::vector<int> predict(const nn::Classifier<float>& net, const std::vector<dsp::Record>& records,
                         std::size_t batch = 256);

/// epoch,train_loss,val_loss,val_accuracy
void write_classifier_log(const std::filesystem::path& path,
                          const std::vector<ClassifierEpoch>& log);

/// Checkpoint plus a sidecar list of training fingerprints.
void save_classifier(const std::filesystem::path& stem, const TrainedClassifier& clf);
TrainedClassifier load_classifier(const std::filesystem::path& stem);

}  // namespace lsmgan::eval
