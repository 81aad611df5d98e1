#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

namespace causal {

/// Binary confusion counts; the positive class is 1 (causal).
struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;

  friend bool operator==(const ClassScores&, const ClassScores&) = default;
};

struct MetricsReport {
  std::array<ClassScores, 2> per_class;  // index = label
  ClassScores macro;                     // support = total
  ClassScores weighted;                  // support = total
  ConfusionMatrix confusion;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> golds);

/// Per-class, macro, and support-weighted precision/recall/F1. Any zero
/// denominator yields 0.
MetricsReport precision_recall_f1(const ConfusionMatrix& cm);
/// Same, checking that `supports` (gold counts of class 0 and 1) agree with cm.
MetricsReport precision_recall_f1(const ConfusionMatrix& cm, std::array<std::size_t, 2> supports);

MetricsReport evaluate_labels(std::span<const int> preds, std::span<const int> golds);

/// {class_0: {p, r, f1, support}, class_1: {...}, macro: {...}, weighted: {...}}
nlohmann::ordered_json metrics_to_json(const MetricsReport& report);
std::string metrics_json(const MetricsReport& report);

}  // namespace causal
