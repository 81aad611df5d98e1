#include "causal/metrics.hpp"

#include <stdexcept>

namespace causal {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

ClassScores score(std::size_t tp, std::size_t fp, std::size_t fn) {
  ClassScores s;
  s.precision = ratio(tp, tp + fp);
  s.recall = ratio(tp, tp + fn);
  const double denom = s.precision + s.recall;
  s.f1 = denom == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / denom;
  s.support = tp + fn;
  return s;
}

}  // namespace

ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> golds) {
  if (preds.size() != golds.size()) {
    throw std::invalid_argument("confusion: " + std::to_string(preds.size()) +
                                " predictions vs " + std::to_string(golds.size()) + " golds");
  }
  if (preds.empty()) throw std::invalid_argument("confusion: no examples");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int p = preds[i];
    const int g = golds[i];
    if ((p != 0 && p != 1) || (g != 0 && g != 1)) {
      throw std::invalid_argument("confusion: labels must be 0 or 1");
    }
    if (p == 1 && g == 1) ++cm.tp;
    else if (p == 1) ++cm.fp;
    else if (g == 1) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

MetricsReport precision_recall_f1(const ConfusionMatrix& cm) {
  MetricsReport r;
  r.confusion = cm;
  r.per_class[1] = score(cm.tp, cm.fp, cm.fn);
  // Class 0 viewed as positive: its true positives are cm.tn.
  r.per_class[0] = score(cm.tn, cm.fn, cm.fp);

  const double total = static_cast<double>(cm.total());
  const auto& c0 = r.per_class[0];
  const auto& c1 = r.per_class[1];
  r.macro = {(c0.precision + c1.precision) / 2.0, (c0.recall + c1.recall) / 2.0,
             (c0.f1 + c1.f1) / 2.0, cm.total()};
  const double w0 = total == 0.0 ? 0.0 : static_cast<double>(c0.support) / total;
  const double w1 = total == 0.0 ? 0.0 : static_cast<double>(c1.support) / total;
  r.weighted = {w0 * c0.precision + w1 * c1.precision, w0 * c0.recall + w1 * c1.recall,
                w0 * c0.f1 + w1 * c1.f1, cm.total()};
  return r;
}

MetricsReport precision_recall_f1(const ConfusionMatrix& cm,
                                  std::array<std::size_t, 2> supports) {
  if (supports[0] != cm.tn + cm.fp || supports[1] != cm.tp + cm.fn) {
    throw std::invalid_argument("precision_recall_f1: supports disagree with confusion counts");
  }
  return precision_recall_f1(cm);
}

MetricsReport evaluate_labels(std::span<const int> preds, std::span<const int> golds) {
  return precision_recall_f1(confusion(preds, golds));
}

nlohmann::ordered_json metrics_to_json(const MetricsReport& report) {
  auto block = [](const ClassScores& s) {
    nlohmann::ordered_json j;
    j["p"] = s.precision;
    j["r"] = s.recall;
    j["f1"] = s.f1;
    j["support"] = s.support;
    return j;
  };
  nlohmann::ordered_json j;
  j["class_0"] = block(report.per_class[0]);
  j["class_1"] = block(report.per_class[1]);
  j["macro"] = block(report.macro);
  j["weighted"] = block(report.weighted);
  return j;
}

std::string metrics_json(const MetricsReport& report) {
  return metrics_to_json(report).dump(2);
}

}  // namespace causal
