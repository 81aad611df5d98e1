#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "causal/encoder.hpp"
#include "causal/tensor.hpp"

namespace causal {

/// Lower clamp for probabilities inside the loss; the upper clamp is 1 - kProbEps.
inline constexpr double kProbEps = 1e-12;

/// Two-way linear head. Row 0 of W scores non-causal, row 1 causal.
struct HeadParams {
  Tensor weight;  // [2 x d_model]
  Tensor bias;    // [2]

  std::vector<NamedTensor> named_parameters() const;
};

HeadParams init_head(std::size_t d_model, std::uint64_t seed);

struct Prediction {
  double p_noncausal = 0.5;
  double p_causal = 0.5;
  int label = 0;
};

/// pooled W^T + b -> [batch x 2].
Tensor head_logits(const HeadParams& head, const Tensor& pooled);
/// softmax(head_logits) along the class axis.
Tensor head_probs(const HeadParams& head, const Tensor& pooled);

/// argmax(softmax(pooled W^T + b)); an exact probability tie predicts 0.
std::vector<Prediction> classify(const HeadParams& head, const Tensor& pooled);

/// -alpha * y * log(p) - (1 - y) * log(1 - p), with p clamped into
/// [kProbEps, 1 - kProbEps].
double weighted_loss(double p_causal, int y_true, double alpha);

/// Batch mean of the weighted loss over probs [batch x 2]. The negative term
/// reads the non-causal column, which equals 1 - p_causal.
Tensor weighted_loss(const Tensor& probs, std::span<const int> labels, double alpha);

}  // namespace causal
