#pragma once

// Confusion-matrix metrics (AF is the positive class), signal-quality
// groups and the leakage-guarded evaluation entry point.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lsmgan/classifier.hpp"
#include "lsmgan/dsp.hpp"

namespace lsmgan::eval {

struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

/// Each metric is empty when its denominator is zero.
struct MetricsReport {
  std::optional<double> accuracy;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::optional<double> ppv;
  std::optional<double> npv;
  std::optional<double> f1;
};

MetricsReport metrics(const ConfusionMatrix& cm);

/// Renders a metric with 6 significant digits, or NA when undefined.
std::string format_metric(const std::optional<double>& value);

enum class QualityGroup { Clean, Low, Mid, High };

inline constexpr std::array<QualityGroup, 4> kAllQualityGroups = {
    QualityGroup::Clean, QualityGroup::Low, QualityGroup::Mid, QualityGroup::High};

std::string_view to_string(QualityGroup g);
QualityGroup parse_quality_group(std::string_view text);

/// {0} -> Clean, (0, 0.2] -> Low, (0.2, 0.6] -> Mid, (0.6, 1] -> High.
QualityGroup quality_group(double artifact_fraction);

/// Throws LeakageDetected when a test record is not Original or matches a
/// training fingerprint.
void check_leakage(const std::vector<dsp::Record>& test,
                   const std::unordered_set<std::uint64_t>& training_fingerprints);

/// Counts predictions (1 = AF) against labels.
ConfusionMatrix confusion(const std::vector<dsp::Record>& test, const std::vector<int>& predicted);

/// Leakage check, then argmax predictions counted into a confusion matrix.
ConfusionMatrix evaluate(const TrainedClassifier& clf, const std::vector<dsp::Record>& test);

/// Confusion matrix per quality group from precomputed predictions.
std::array<ConfusionMatrix, 4> confusion_by_group(const std::vector<dsp::Record>& test,
                                                  const std::vector<int>& predicted);

}  // namespace lsmgan::eval
