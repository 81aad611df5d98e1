#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "causal/checkpoint.hpp"
#include "causal/corpus.hpp"
#include "causal/metrics.hpp"
#include "causal/tokenizer.hpp"

namespace causal {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Vector> m;
  std::vector<Vector> v;
  std::size_t step = 0;

  /// Zero moments shaped like `params`.
  static AdamState zeros_like(std::span<const Tensor> params);
};

/// One bias-corrected Adam update of `params` in place.
void adam_step(std::span<Tensor> params, std::span<const Vector> grads, AdamState& state,
               const AdamConfig& config);

/// Rescales `grads` so their global L2 norm is at most `max_norm`; returns the
/// norm before clipping.
double clip_grad_norm(std::span<Vector> grads, double max_norm);

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 16;
  double learning_rate = 1e-3;
  /// Unset means the train split's non-causal / causal ratio.
  std::optional<double> alpha;
  std::size_t max_len = 128;
  std::uint64_t seed = 42;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::optional<double> clip_norm;
  std::string profile = "tiny";
  Pooling pooling = Pooling::Cls;
  std::optional<double> dropout_rate;  // unset keeps the profile default
  /// Overrides the named profile when set (vocab_size/max_position are filled in).
  std::optional<EncoderConfig> encoder;

  /// Throws std::invalid_argument naming the offending option.
  void validate() const;
  EncoderConfig encoder_config(std::size_t vocab_size) const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  std::optional<MetricsReport> dev;
  double compute_seconds = 0.0;  // forward + backward only
  double wall_seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // 0 = initial parameters retained
  double alpha = 1.0;
  std::size_t parameter_count = 0;
  /// Retained model scored on the training split.
  MetricsReport final_train;
  std::optional<MetricsReport> final_dev;
  std::string checkpoint_path;

  double compute_seconds() const;
  std::vector<double> loss_trajectory() const;
};

struct TrainResult {
  TrainReport report;
  Model model;  // best-dev-F1 parameters
  CheckpointInfo info;
};

/// Seeded shuffle, mini-batches (last partial batch kept), weighted loss,
/// backward, optional clipping, Adam; dev evaluation after every epoch.
/// The retained model has the best dev weighted F1 (earliest on ties), or
/// the last epoch when `dev` is empty.
TrainResult train(const Corpus& train_split, const Corpus& dev, const Vocabulary& vocab,
                  const TrainConfig& config);

struct PredictionRow {
  std::string id;
  double p_causal = 0.0;
  int label = 0;
};

struct Evaluation {
  MetricsReport metrics;
  std::vector<PredictionRow> predictions;
};

/// Eval-mode predictions in input order.
std::vector<PredictionRow> predict(const Model& model, const Vocabulary& vocab,
                                   std::span<const std::string> ids,
                                   std::span<const std::string> texts, std::size_t max_len,
                                   std::size_t batch_size = 32);

Evaluation evaluate(const Model& model, const Corpus& dataset, const Vocabulary& vocab,
                    std::size_t max_len);
/// Refuses a vocabulary whose hash differs from the checkpoint manifest.
Evaluation evaluate(const Checkpoint& checkpoint, const Corpus& dataset, const Vocabulary& vocab,
                    std::size_t max_len);

class VocabMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void check_vocab(const CheckpointInfo& info, const Vocabulary& vocab);

/// `id;p_causal;label` per row.
std::string format_predictions(std::span<const PredictionRow> rows, char delimiter = ';');

nlohmann::ordered_json report_to_json(const TrainReport& report);
std::string report_table(const TrainReport& report);

}  // namespace causal
