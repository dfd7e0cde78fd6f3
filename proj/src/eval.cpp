#include "lsmgan/eval.hpp"

#include "lsmgan/corpus_io.hpp"
#include "lsmgan/error.hpp"
#include "lsmgan/gan.hpp"

namespace lsmgan::eval {

namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

MetricsReport metrics(const ConfusionMatrix& cm) {
  MetricsReport m;
  m.accuracy = ratio(cm.tp + cm.tn, cm.total());
  m.sensitivity = ratio(cm.tp, cm.tp + cm.fn);
  m.specificity = ratio(cm.tn, cm.tn + cm.fp);
  m.ppv = ratio(cm.tp, cm.tp + cm.fp);
  m.npv = ratio(cm.tn, cm.tn + cm.fn);
  if (m.ppv && m.sensitivity && *m.ppv + *m.sensitivity > 0.0)
    m.f1 = 2.0 * *m.ppv * *m.sensitivity / (*m.ppv + *m.sensitivity);
  return m;
}

std::string format_metric(const std::optional<double>& value) {
  return value ? gan::format_number(*value) : std::string("NA");
}

std::string_view to_string(QualityGroup g) {
  switch (g) {
    case QualityGroup::Clean: return "Clean";
    case QualityGroup::Low: return "Low";
    case QualityGroup::Mid: return "Mid";
    case QualityGroup::High: return "High";
  }
  return "?";
}

QualityGroup parse_quality_group(std::string_view text) {
  for (auto g : kAllQualityGroups)
    if (to_string(g) == text) return g;
  throw Error(ErrorCode::ConfigError, "unknown quality group '" + std::string(text) + "'");
}

QualityGroup quality_group(double f) {
  if (!(f >= 0.0 && f <= 1.0))
    throw Error(ErrorCode::DomainError, "artifact fraction outside [0, 1]");
  if (f == 0.0) return QualityGroup::Clean;
  if (f <= 0.2) return QualityGroup::Low;
  if (f <= 0.6) return QualityGroup::Mid;
  return QualityGroup::High;
}

void check_leakage(const std::vector<dsp::Record>& test,
                   const std::unordered_set<std::uint64_t>& training_fingerprints) {
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (test[i].origin != AugmentMethod::Original)
      throw Error(ErrorCode::LeakageDetected, "test record " + std::to_string(i) + " is " +
                                                  std::string(to_string(test[i].origin)) +
                                                  " synthetic");
    if (training_fingerprints.count(corpus::fingerprint(test[i])))
      throw Error(ErrorCode::LeakageDetected,
                  "test record " + std::to_string(i) + " also appears in the training corpus");
  }
}

ConfusionMatrix confusion(const std::vector<dsp::Record>& test, const std::vector<int>& predicted) {
  if (predicted.size() != test.size())
    throw Error(ErrorCode::LengthMismatch, "one prediction per record expected");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const bool af = test[i].label == RhythmClass::AF;
    const bool said_af = predicted[i] == 1;
    if (af && said_af) ++cm.tp;
    else if (af) ++cm.fn;
    else if (said_af) ++cm.fp;
    else ++cm.tn;
  }
  return cm;
}

ConfusionMatrix evaluate(const TrainedClassifier& clf, const std::vector<dsp::Record>& test) {
  check_leakage(test, clf.fingerprints);
  if (test.empty()) return {};
  return confusion(test, predict(clf.net, test));
}

std::array<ConfusionMatrix, 4> confusion_by_group(const std::vector<dsp::Record>& test,
                                                  const std::vector<int>& predicted) {
  if (predicted.size() != test.size())
    throw Error(ErrorCode::LengthMismatch, "one prediction per record expected");
  std::array<std::vector<dsp::Record>, 4> parts;
  std::array<std::vector<int>, 4> preds;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto g = static_cast<std::size_t>(quality_group(test[i].artifact_fraction));
    parts[g].push_back(test[i]);
    preds[g].push_back(predicted[i]);
  }
  std::array<ConfusionMatrix, 4> out;
  for (std::size_t g = 0; g < 4; ++g) out[g] = confusion(parts[g], preds[g]);
  return out;
}

}  // namespace lsmgan::eval
