#include "causal/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "causal/ops.hpp"
#include "causal/random.hpp"

namespace causal {

namespace {

void require_alpha(double alpha) {
  if (!(alpha > 0.0)) {
    throw std::invalid_argument("alpha must be > 0, got " + std::to_string(alpha));
  }
}

}  // namespace

std::vector<NamedTensor> HeadParams::named_parameters() const {
  return {{"head.weight", weight}, {"head.bias", bias}};
}

HeadParams init_head(std::size_t d_model, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> dist(0.0, 0.02);
  Vector w(static_cast<Eigen::Index>(2 * d_model));
  for (auto& x : w) x = dist(rng);
  return {Tensor::from({2, d_model}, std::move(w), true), Tensor::zeros({2}, true)};
}

Tensor head_logits(const HeadParams& head, const Tensor& pooled) {
  if (pooled.rank() != 2 || head.weight.rank() != 2 || pooled.dim(1) != head.weight.dim(1)) {
    throw ShapeError("classify: pooled " + to_string(pooled.shape()) +
                     " does not match head weight " + to_string(head.weight.shape()));
  }
  return add_bias(matmul(pooled, transpose(head.weight, 0, 1)), head.bias);
}

Tensor head_probs(const HeadParams& head, const Tensor& pooled) {
  return softmax(head_logits(head, pooled), 1);
}

std::vector<Prediction> classify(const HeadParams& head, const Tensor& pooled) {
  NoGradGuard no_grad;
  const Tensor probs = head_probs(head, pooled);
  std::vector<Prediction> out(probs.dim(0));
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].p_noncausal = probs[2 * i];
    out[i].p_causal = probs[2 * i + 1];
    out[i].label = out[i].p_causal > out[i].p_noncausal ? 1 : 0;
  }
  return out;
}

double weighted_loss(double p_causal, int y_true, double alpha) {
  require_alpha(alpha);
  if (y_true != 0 && y_true != 1) throw std::invalid_argument("y_true must be 0 or 1");
  const double p = std::clamp(p_causal, kProbEps, 1.0 - kProbEps);
  const double y = y_true;
  return -alpha * y * std::log(p) - (1.0 - y) * std::log(1.0 - p);
}

Tensor weighted_loss(const Tensor& probs, std::span<const int> labels, double alpha) {
  require_alpha(alpha);
  if (probs.rank() != 2 || probs.dim(1) != 2 || probs.dim(0) != labels.size()) {
    throw ShapeError("weighted_loss: probs " + to_string(probs.shape()) + " for " +
                     std::to_string(labels.size()) + " labels");
  }
  const std::size_t n = labels.size();
  if (n == 0) throw std::invalid_argument("weighted_loss: empty batch");
  // Per-entry coefficients: column 1 carries alpha * y, column 0 carries (1 - y).
  Vector coeff(static_cast<Eigen::Index>(2 * n));
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw std::invalid_argument("labels must be 0 or 1");
    coeff[static_cast<Eigen::Index>(2 * i)] = labels[i] == 0 ? 1.0 : 0.0;
    coeff[static_cast<Eigen::Index>(2 * i + 1)] = labels[i] == 1 ? alpha : 0.0;
  }
  const Tensor log_p = log(clamp(probs, kProbEps, 1.0 - kProbEps));
  return scale(sum(mul(log_p, Tensor::from({n, 2}, std::move(coeff)))),
               -1.0 / static_cast<Scalar>(n));
}

}  // namespace causal
