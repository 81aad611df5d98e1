#include "causal/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "causal/ops.hpp"
#include "causal/random.hpp"

namespace causal {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<EncodedSequence> encode_all(const Vocabulary& vocab, std::span<const std::string> texts,
                                        std::size_t max_len) {
  std::vector<EncodedSequence> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(encode(vocab, t, max_len));
  return out;
}

std::vector<EncodedSequence> encode_corpus(const Vocabulary& vocab, const Corpus& corpus,
                                           std::size_t max_len) {
  std::vector<EncodedSequence> out;
  out.reserve(corpus.size());
  for (const auto& s : corpus) out.push_back(encode(vocab, s.text, max_len));
  return out;
}

std::vector<int> labels_of(const Corpus& corpus) {
  std::vector<int> out;
  out.reserve(corpus.size());
  for (const auto& s : corpus) out.push_back(static_cast<int>(s.label));
  return out;
}

std::vector<Prediction> predict_encoded(const Model& model, std::span<const EncodedSequence> seqs,
                                        std::size_t batch_size) {
  NoGradGuard no_grad;
  std::vector<Prediction> out;
  out.reserve(seqs.size());
  for (std::size_t start = 0; start < seqs.size(); start += batch_size) {
    const auto chunk = seqs.subspan(start, std::min(batch_size, seqs.size() - start));
    const Tensor pooled = encode_forward(model.encoder, chunk, false, 0);
    for (const auto& p : classify(model.head, pooled)) out.push_back(p);
  }
  return out;
}

MetricsReport score_encoded(const Model& model, std::span<const EncodedSequence> seqs,
                            std::span<const int> golds) {
  std::vector<int> preds;
  preds.reserve(seqs.size());
  for (const auto& p : predict_encoded(model, seqs, 32)) preds.push_back(p.label);
  return evaluate_labels(preds, golds);
}

}  // namespace

AdamState AdamState::zeros_like(std::span<const Tensor> params) {
  AdamState s;
  for (const auto& p : params) {
    s.m.push_back(Vector::Zero(static_cast<Eigen::Index>(p.size())));
    s.v.push_back(Vector::Zero(static_cast<Eigen::Index>(p.size())));
  }
  return s;
}

void adam_step(std::span<Tensor> params, std::span<const Vector> grads, AdamState& state,
               const AdamConfig& config) {
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw ShapeError("adam_step: " + std::to_string(params.size()) + " params, " +
                     std::to_string(grads.size()) + " grads, " + std::to_string(state.m.size()) +
                     " moment slots");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto n = static_cast<Eigen::Index>(params[i].size());
    if (grads[i].size() != n || state.m[i].size() != n || state.v[i].size() != n) {
      throw ShapeError("adam_step: size mismatch at parameter " + std::to_string(i));
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = state.m[i];
    auto& v = state.v[i];
    const auto& g = grads[i];
    m = config.beta1 * m + (1.0 - config.beta1) * g;
    v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseAbs2();
    params[i].values().array() -=
        config.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + config.eps);
  }
}

double clip_grad_norm(std::span<Vector> grads, double max_norm) {
  double sq = 0.0;
  for (const auto& g : grads) sq += g.squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double factor = max_norm / norm;
    for (auto& g : grads) g *= factor;
  }
  return norm;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& flag, const std::string& m) {
    throw std::invalid_argument("--" + flag + ": " + m);
  };
  if (batch_size < 1) fail("batch-size", "must be >= 1");
  if (!(learning_rate > 0.0)) fail("lr", "must be > 0");
  if (alpha && !(*alpha > 0.0)) fail("alpha", "must be > 0");
  if (max_len < 3) fail("max-len", "must be >= 3");
  if (!(beta1 > 0.0 && beta1 < 1.0)) fail("beta1", "must lie in (0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) fail("beta2", "must lie in (0, 1)");
  if (!(adam_eps > 0.0)) fail("adam-eps", "must be > 0");
  if (clip_norm && !(*clip_norm > 0.0)) fail("clip-norm", "must be > 0");
  if (dropout_rate && !(*dropout_rate >= 0.0 && *dropout_rate < 1.0)) {
    fail("dropout", "must lie in [0, 1)");
  }
  if (!encoder && std::find(profile_names().begin(), profile_names().end(), profile) ==
                      profile_names().end()) {
    fail("profile", "unknown profile '" + profile + "' (expected tiny, small, or medium)");
  }
}

EncoderConfig TrainConfig::encoder_config(std::size_t vocab_size) const {
  EncoderConfig c = encoder ? *encoder : profile_config(profile, vocab_size, max_len);
  c.vocab_size = vocab_size;
  c.max_position = std::max(c.max_position, max_len);
  if (!encoder) c.pooling = pooling;
  if (dropout_rate) c.dropout_rate = *dropout_rate;
  c.validate();
  return c;
}

double TrainReport::compute_seconds() const {
  double total = 0.0;
  for (const auto& e : epochs) total += e.compute_seconds;
  return total;
}

std::vector<double> TrainReport::loss_trajectory() const {
  std::vector<double> out;
  for (const auto& e : epochs) out.push_back(e.train_loss);
  return out;
}

TrainResult train(const Corpus& train_split, const Corpus& dev, const Vocabulary& vocab,
                  const TrainConfig& config) {
  config.validate();
  if (train_split.empty()) throw std::invalid_argument("train: empty train split");

  const EncoderConfig enc = config.encoder_config(vocab.size());
  double alpha = 1.0;
  if (config.alpha) {
    alpha = *config.alpha;
  } else {
    const auto stats = compute_stats(train_split);
    if (stats.n_causal > 0 && stats.n_noncausal > 0) alpha = stats.imbalance_ratio;
  }

  Model model = init_model(enc, config.seed);
  std::vector<Tensor> params = model.parameters();
  AdamState state = AdamState::zeros_like(params);
  const AdamConfig adam{config.learning_rate, config.beta1, config.beta2, config.adam_eps};

  const auto train_seqs = encode_corpus(vocab, train_split, config.max_len);
  const auto train_labels = labels_of(train_split);
  const auto dev_seqs = encode_corpus(vocab, dev, config.max_len);
  const auto dev_labels = labels_of(dev);

  TrainResult result;
  result.report.alpha = alpha;
  result.report.parameter_count = model.encoder.parameter_count() + 2 * enc.d_model + 2;
  Model best = model.clone();
  double best_f1 = -1.0;

  std::vector<std::size_t> order(train_split.size());
  std::vector<Vector> grads(params.size());
  std::uint64_t step = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto epoch_start = Clock::now();
    EpochRecord record;
    record.epoch = epoch;

    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(derive_seed(config.seed, seed_stream::kShuffle, epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      std::vector<EncodedSequence> batch;
      std::vector<int> labels;
      for (std::size_t i = start; i < stop; ++i) {
        batch.push_back(train_seqs[order[i]]);
        labels.push_back(train_labels[order[i]]);
      }

      const auto compute_start = Clock::now();
      model.zero_grad();
      const Tensor pooled = encode_forward(model.encoder, batch, true,
                                           derive_seed(config.seed, seed_stream::kDropout, step));
      const Tensor loss = weighted_loss(head_probs(model.head, pooled), labels, alpha);
      backward(loss);
      record.compute_seconds += seconds_since(compute_start);

      for (std::size_t i = 0; i < params.size(); ++i) grads[i] = params[i].grad();
      if (config.clip_norm) clip_grad_norm(grads, *config.clip_norm);
      adam_step(params, grads, state, adam);

      loss_sum += loss.item() * static_cast<double>(batch.size());
      ++step;
    }
    record.train_loss = loss_sum / static_cast<double>(train_split.size());

    if (!dev.empty()) {
      record.dev = score_encoded(model, dev_seqs, dev_labels);
      if (record.dev->weighted.f1 > best_f1) {
        best_f1 = record.dev->weighted.f1;
        best = model.clone();
        result.report.best_epoch = epoch;
      }
    } else {
      best = model.clone();
      result.report.best_epoch = epoch;
    }
    record.wall_seconds = seconds_since(epoch_start);
    result.report.epochs.push_back(std::move(record));
  }

  result.report.final_train = score_encoded(best, train_seqs, train_labels);
  if (!dev.empty()) result.report.final_dev = score_encoded(best, dev_seqs, dev_labels);
  result.model = std::move(best);
  result.info.config = enc;
  result.info.max_len = config.max_len;
  result.info.casing = vocab.casing();
  result.info.vocab_hash = vocab.hash_hex();
  result.info.seed = config.seed;
  result.info.epoch = result.report.best_epoch;
  result.info.alpha = alpha;
  return result;
}

std::vector<PredictionRow> predict(const Model& model, const Vocabulary& vocab,
                                   std::span<const std::string> ids,
                                   std::span<const std::string> texts, std::size_t max_len,
                                   std::size_t batch_size) {
  if (ids.size() != texts.size()) throw std::invalid_argument("predict: ids/texts length mismatch");
  const auto seqs = encode_all(vocab, texts, max_len);
  const auto preds = predict_encoded(model, seqs, std::max<std::size_t>(batch_size, 1));
  std::vector<PredictionRow> rows;
  rows.reserve(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    rows.push_back({ids[i], preds[i].p_causal, preds[i].label});
  }
  return rows;
}

Evaluation evaluate(const Model& model, const Corpus& dataset, const Vocabulary& vocab,
                    std::size_t max_len) {
  if (dataset.empty()) throw std::invalid_argument("evaluate: empty dataset");
  std::vector<std::string> ids, texts;
  for (const auto& s : dataset) {
    ids.push_back(s.id);
    texts.push_back(s.text);
  }
  Evaluation ev;
  ev.predictions = predict(model, vocab, ids, texts, max_len);
  std::vector<int> preds;
  for (const auto& r : ev.predictions) preds.push_back(r.label);
  ev.metrics = evaluate_labels(preds, labels_of(dataset));
  return ev;
}

void check_vocab(const CheckpointInfo& info, const Vocabulary& vocab) {
  if (info.vocab_hash != vocab.hash_hex()) {
    throw VocabMismatch("vocabulary hash mismatch: checkpoint expects " + info.vocab_hash +
                        ", got " + vocab.hash_hex());
  }
}

Evaluation evaluate(const Checkpoint& checkpoint, const Corpus& dataset, const Vocabulary& vocab,
                    std::size_t max_len) {
  check_vocab(checkpoint.info, vocab);
  if (max_len > checkpoint.info.config.max_position) {
    throw std::invalid_argument("max_len " + std::to_string(max_len) +
                                " exceeds the checkpoint's max_position " +
                                std::to_string(checkpoint.info.config.max_position));
  }
  return evaluate(checkpoint.model, dataset, vocab, max_len);
}

std::string format_predictions(std::span<const PredictionRow> rows, char delimiter) {
  std::string out;
  for (const auto& r : rows) {
    out += fmt::format("{}{}{}{}{}\n", r.id, delimiter, r.p_causal, delimiter, r.label);
  }
  return out;
}

nlohmann::ordered_json report_to_json(const TrainReport& report) {
  nlohmann::ordered_json j;
  j["alpha"] = report.alpha;
  j["parameter_count"] = report.parameter_count;
  j["best_epoch"] = report.best_epoch;
  auto epochs = nlohmann::ordered_json::array();
  for (const auto& e : report.epochs) {
    nlohmann::ordered_json row;
    row["epoch"] = e.epoch;
    row["train_loss"] = e.train_loss;
    row["dev"] = e.dev ? metrics_to_json(*e.dev) : nlohmann::ordered_json();
    row["compute_seconds"] = e.compute_seconds;
    row["wall_seconds"] = e.wall_seconds;
    epochs.push_back(std::move(row));
  }
  j["epochs"] = std::move(epochs);
  j["final_train"] = metrics_to_json(report.final_train);
  j["final_dev"] = report.final_dev ? metrics_to_json(*report.final_dev) : nlohmann::ordered_json();
  j["checkpoint"] = report.checkpoint_path;
  return j;
}

std::string report_table(const TrainReport& report) {
  std::string out = fmt::format("{:>5} | {:>12} | {:>10} | {:>10} | {:>10} | {:>9}\n", "Epoch",
                                "Train loss", "Dev F1", "Precision", "Recall", "Time (s)");
  out += std::string(out.size() - 1, '-') + "\n";
  for (const auto& e : report.epochs) {
    if (e.dev) {
      out += fmt::format("{:>5} | {:>12.6f} | {:>10.6f} | {:>10.6f} | {:>10.6f} | {:>9.3f}\n",
                         e.epoch, e.train_loss, e.dev->weighted.f1, e.dev->weighted.precision,
                         e.dev->weighted.recall, e.compute_seconds);
    } else {
      out += fmt::format("{:>5} | {:>12.6f} | {:>10} | {:>10} | {:>10} | {:>9.3f}\n", e.epoch,
                         e.train_loss, "-", "-", "-", e.compute_seconds);
    }
  }
  out += fmt::format("best epoch: {}  alpha: {}  train F1 (retained): {:.6f}\n", report.best_epoch,
                     report.alpha, report.final_train.weighted.f1);
  return out;
}

}  // namespace causal
