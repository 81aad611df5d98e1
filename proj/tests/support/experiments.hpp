#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "causal/trainer.hpp"
#include "support/synthetic.hpp"

namespace causal::testing {

// 64 clean sentences, half causal; the trigger phrase separates the classes.
inline Corpus overfit_corpus() {
  return synthetic_corpus({.n_causal = 32, .n_noncausal = 32, .seed = 64});
}

inline TrainConfig overfit_config(std::uint64_t seed = 42) {
  TrainConfig c;
  c.epochs = 30;
  c.batch_size = 8;
  c.learning_rate = 1e-3;
  c.alpha = 1.0;
  c.max_len = 32;
  c.seed = seed;
  return c;
}

inline Vocabulary overfit_vocab(const Corpus& corpus) {
  return build_vocab(corpus, 400, 1, Casing::Cased);
}

// 16:1 imbalance, temporal confounders in half the negatives, 4% label noise.
inline Corpus imbalanced_corpus() {
  return synthetic_corpus({.n_causal = 24,
                           .n_noncausal = 384,
                           .confounder_rate = 0.5,
                           .label_noise = 0.04,
                           .seed = 1616});
}

struct AlphaRun {
  double alpha = 1.0;
  std::uint64_t seed = 0;
  double dev_recall = 0.0;
};

// Train on a fixed stratified split, retaining the final epoch, and report
// causal-class recall on the held-out part.
inline AlphaRun alpha_recall_run(const Corpus& corpus, double alpha, std::uint64_t seed) {
  const Split split = stratified_split(corpus, 0.25, 7);
  const Vocabulary vocab = build_vocab(split.train, 400, 2, Casing::Cased);
  TrainConfig c;
  c.epochs = 4;
  c.batch_size = 16;
  c.learning_rate = 1e-3;
  c.alpha = alpha;
  c.max_len = 32;
  c.seed = seed;
  const TrainResult r = train(split.train, {}, vocab, c);
  const Evaluation e = evaluate(r.model, split.dev, vocab, c.max_len);
  return {alpha, seed, e.metrics.per_class[1].recall};
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace causal::testing
