#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "causal/corpus.hpp"
#include "causal/metrics.hpp"
#include "causal/tokenizer.hpp"
#include "causal/trainer.hpp"

namespace causal {

enum class SweepKind { Length, Profile };

struct SweepRow {
  std::string configuration;  // "64" or "tiny"
  MetricsReport metrics;      // retained model on the dev split
  double compute_seconds = 0.0;
  double wall_seconds = 0.0;
};

struct SweepReport {
  SweepKind kind = SweepKind::Length;
  std::vector<SweepRow> rows;
};

class SweepError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline const std::vector<std::size_t> kDefaultSweepLengths{64, 128, 256, 512};

/// Trains and evaluates one model per truncation length under the shared
/// seed in `base`.
SweepReport sweep_lengths(const Corpus& train_split, const Corpus& dev, const Vocabulary& vocab,
                          const TrainConfig& base, const std::vector<std::size_t>& lengths);
/// Same, one model per encoder profile.
SweepReport sweep_profiles(const Corpus& train_split, const Corpus& dev, const Vocabulary& vocab,
                           const TrainConfig& base, const std::vector<std::string>& profiles);

/// Plain-text table: "Sequence length | F1 Score | Precision | Recall" (or
/// "Model | ..."), followed by a wall-clock block.
std::string sweep_table(const SweepReport& report);
nlohmann::ordered_json sweep_to_json(const SweepReport& report);

}  // namespace causal
