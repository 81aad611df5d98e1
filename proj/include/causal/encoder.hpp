#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "causal/tensor.hpp"
#include "causal/tokenizer.hpp"

namespace causal {

enum class Pooling { Cls, Mean };

std::string_view to_string(Pooling pooling);
Pooling parse_pooling(std::string_view name);

struct EncoderConfig {
  std::size_t n_layers = 2;
  std::size_t n_heads = 4;
  std::size_t d_model = 64;
  std::size_t d_ff = 256;
  std::size_t vocab_size = 0;
  std::size_t max_position = 128;
  double dropout_rate = 0.1;
  Pooling pooling = Pooling::Cls;
  double layer_norm_eps = 1e-12;

  std::size_t d_head() const { return d_model / n_heads; }
  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

/// Named size presets: tiny (2 layers, 4 heads, 64/256), small (4, 4, 128/512),
/// medium (6, 8, 256/1024).
EncoderConfig profile_config(std::string_view profile, std::size_t vocab_size,
                             std::size_t max_position);
const std::vector<std::string>& profile_names();

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

struct LayerParams {
  Tensor wq, wk, wv, wo;  // [d_model x d_model]
  Tensor w1;              // [d_model x d_ff]
  Tensor w2;              // [d_ff x d_model]
  Tensor ln1_gamma, ln1_beta, ln2_gamma, ln2_beta;
};

struct EncoderParams {
  EncoderConfig config;
  Tensor token_embeddings;     // [vocab_size x d_model]
  Tensor position_embeddings;  // [max_position x d_model]
  std::vector<LayerParams> layers;

  /// Every learnable tensor in declaration order.
  std::vector<NamedTensor> named_parameters() const;
  std::size_t parameter_count() const;
};

/// N(0, 0.02) weights, unit gammas, zero betas. Deterministic per seed.
EncoderParams init_params(const EncoderConfig& config, std::uint64_t seed);

/// Inverted dropout with a counter-based stream; one draw per call.
class Dropout {
 public:
  Dropout(double rate, std::uint64_t seed) : rate_(rate), seed_(seed) {}
  Tensor apply(const Tensor& x);
  double rate() const { return rate_; }

 private:
  double rate_;
  std::uint64_t seed_;
  std::uint64_t calls_ = 0;
};

/// Softmax(q k^T / sqrt(d_head)) over keys with key_mask; q, k are
/// [batch x heads x len x d_head], key_mask is [batch x len]. A batch row with
/// no unmasked key attends entirely to position 0.
Tensor attention_weights(const Tensor& q, const Tensor& k, std::span<const std::uint8_t> key_mask);

/// Scaled dot-product attention; returns [batch x heads x len x d_head].
/// When `probe` is given, the pre-dropout weights are appended to it.
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v,
                 std::span<const std::uint8_t> key_mask, Dropout* dropout = nullptr,
                 std::vector<Tensor>* probe = nullptr);

/// Runs the encoder and returns one pooled row per sequence: [batch x d_model].
/// Dropout is active only when `train_mode` and is a pure function of `seed`.
Tensor encode_forward(const EncoderParams& params, std::span<const EncodedSequence> batch,
                      bool train_mode, std::uint64_t seed,
                      std::vector<Tensor>* attention_probe = nullptr);

}  // namespace causal
