#include "causal/encoder.hpp"

#include <cmath>
#include <stdexcept>

#include "causal/ops.hpp"
#include "causal/random.hpp"

namespace causal {

namespace {

constexpr Scalar kMaskedScore = -1e30;
constexpr double kInitStd = 0.02;

Tensor normal_tensor(Shape shape, Rng& rng) {
  std::normal_distribution<double> dist(0.0, kInitStd);
  Vector v(static_cast<Eigen::Index>(numel(shape)));
  for (auto& x : v) x = dist(rng);
  return Tensor::from(std::move(shape), std::move(v), true);
}

Tensor split_heads(const Tensor& x, std::size_t batch, std::size_t len, std::size_t heads) {
  const std::size_t d_head = x.dim(1) / heads;
  return permute(reshape(x, {batch, len, heads, d_head}), {0, 2, 1, 3});
}

}  // namespace

std::string_view to_string(Pooling pooling) { return pooling == Pooling::Cls ? "cls" : "mean"; }

Pooling parse_pooling(std::string_view name) {
  if (name == "cls") return Pooling::Cls;
  if (name == "mean") return Pooling::Mean;
  throw std::invalid_argument("unknown pooling '" + std::string(name) + "'");
}

void EncoderConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("encoder config: " + m); };
  if (n_layers == 0) fail("n_layers must be >= 1");
  if (n_heads == 0) fail("n_heads must be >= 1");
  if (d_model == 0 || d_model % n_heads != 0) {
    fail("d_model " + std::to_string(d_model) + " not divisible by n_heads " +
         std::to_string(n_heads));
  }
  if (d_ff == 0) fail("d_ff must be >= 1");
  if (vocab_size <= Vocabulary::kNumSpecial) fail("vocab_size must exceed the special tokens");
  if (max_position == 0) fail("max_position must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) fail("dropout_rate must lie in [0, 1)");
  if (!(layer_norm_eps > 0.0)) fail("layer_norm_eps must be > 0");
}

const std::vector<std::string>& profile_names() {
  static const std::vector<std::string> names{"tiny", "small", "medium"};
  return names;
}

EncoderConfig profile_config(std::string_view profile, std::size_t vocab_size,
                             std::size_t max_position) {
  EncoderConfig c;
  c.vocab_size = vocab_size;
  c.max_position = max_position;
  if (profile == "tiny") {
    c.n_layers = 2, c.n_heads = 4, c.d_model = 64, c.d_ff = 256;
  } else if (profile == "small") {
    c.n_layers = 4, c.n_heads = 4, c.d_model = 128, c.d_ff = 512;
  } else if (profile == "medium") {
    c.n_layers = 6, c.n_heads = 8, c.d_model = 256, c.d_ff = 1024;
  } else {
    throw std::invalid_argument("unknown profile '" + std::string(profile) +
                                "' (expected tiny, small, or medium)");
  }
  return c;
}

std::vector<NamedTensor> EncoderParams::named_parameters() const {
  std::vector<NamedTensor> out;
  out.push_back({"token_embeddings", token_embeddings});
  out.push_back({"position_embeddings", position_embeddings});
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& p = layers[l];
    const std::string pre = "layer" + std::to_string(l) + ".";
    out.push_back({pre + "wq", p.wq});
    out.push_back({pre + "wk", p.wk});
    out.push_back({pre + "wv", p.wv});
    out.push_back({pre + "wo", p.wo});
    out.push_back({pre + "w1", p.w1});
    out.push_back({pre + "w2", p.w2});
    out.push_back({pre + "ln1_gamma", p.ln1_gamma});
    out.push_back({pre + "ln1_beta", p.ln1_beta});
    out.push_back({pre + "ln2_gamma", p.ln2_gamma});
    out.push_back({pre + "ln2_beta", p.ln2_beta});
  }
  return out;
}

std::size_t EncoderParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : named_parameters()) n += p.tensor.size();
  return n;
}

EncoderParams init_params(const EncoderConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  const std::size_t d = config.d_model;
  EncoderParams params;
  params.config = config;
  params.token_embeddings = normal_tensor({config.vocab_size, d}, rng);
  params.position_embeddings = normal_tensor({config.max_position, d}, rng);
  for (std::size_t l = 0; l < config.n_layers; ++l) {
    LayerParams p;
    p.wq = normal_tensor({d, d}, rng);
    p.wk = normal_tensor({d, d}, rng);
    p.wv = normal_tensor({d, d}, rng);
    p.wo = normal_tensor({d, d}, rng);
    p.w1 = normal_tensor({d, config.d_ff}, rng);
    p.w2 = normal_tensor({config.d_ff, d}, rng);
    p.ln1_gamma = Tensor::full({d}, 1.0, true);
    p.ln1_beta = Tensor::zeros({d}, true);
    p.ln2_gamma = Tensor::full({d}, 1.0, true);
    p.ln2_beta = Tensor::zeros({d}, true);
    params.layers.push_back(std::move(p));
  }
  return params;
}

Tensor Dropout::apply(const Tensor& x) {
  if (rate_ <= 0.0) return x;
  Rng rng(derive_seed(seed_, seed_stream::kDropout, calls_++));
  std::bernoulli_distribution keep(1.0 - rate_);
  const Scalar scale_kept = 1.0 / (1.0 - rate_);
  Vector mask(static_cast<Eigen::Index>(x.size()));
  for (auto& m : mask) m = keep(rng) ? scale_kept : 0.0;
  return mul(x, Tensor::from(x.shape(), std::move(mask)));
}

Tensor attention_weights(const Tensor& q, const Tensor& k, std::span<const std::uint8_t> key_mask) {
  if (q.rank() != 4 || k.shape() != q.shape()) {
    throw ShapeError("attention: q " + to_string(q.shape()) + " and k " + to_string(k.shape()) +
                     " must both be [batch x heads x len x d_head]");
  }
  const std::size_t batch = q.dim(0), heads = q.dim(1), len = q.dim(2), d_head = q.dim(3);
  if (key_mask.size() != batch * len) {
    throw ShapeError("attention: mask has " + std::to_string(key_mask.size()) +
                     " entries, expected " + std::to_string(batch * len));
  }
  std::vector<std::uint8_t> keep(batch * heads * len * len);
  for (std::size_t b = 0; b < batch; ++b) {
    auto row = key_mask.subspan(b * len, len);
    std::vector<std::uint8_t> keys(row.begin(), row.end());
    if (std::find(keys.begin(), keys.end(), 1) == keys.end()) keys[0] = 1;
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t i = 0; i < len; ++i) {
        std::copy(keys.begin(), keys.end(), keep.begin() + static_cast<std::ptrdiff_t>(
                                                             ((b * heads + h) * len + i) * len));
      }
    }
  }
  Tensor scores = scale(matmul(q, transpose(k, 2, 3)), 1.0 / std::sqrt(static_cast<Scalar>(d_head)));
  return softmax(masked_fill(scores, keep, kMaskedScore), 3);
}

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v,
                 std::span<const std::uint8_t> key_mask, Dropout* dropout,
                 std::vector<Tensor>* probe) {
  if (v.shape() != q.shape()) {
    throw ShapeError("attention: v " + to_string(v.shape()) + " does not match q " +
                     to_string(q.shape()));
  }
  Tensor weights = attention_weights(q, k, key_mask);
  if (probe) probe->push_back(weights);
  if (dropout) weights = dropout->apply(weights);
  return matmul(weights, v);
}

Tensor encode_forward(const EncoderParams& params, std::span<const EncodedSequence> batch,
                      bool train_mode, std::uint64_t seed, std::vector<Tensor>* attention_probe) {
  const auto& cfg = params.config;
  if (batch.empty()) throw std::invalid_argument("encode_forward: empty batch");
  const std::size_t len = batch.front().max_len();
  for (const auto& s : batch) {
    if (s.max_len() != len) throw ShapeError("encode_forward: sequences differ in max_len");
  }
  if (len > cfg.max_position) {
    throw std::invalid_argument("encode_forward: sequence length " + std::to_string(len) +
                                " exceeds max_position " + std::to_string(cfg.max_position));
  }
  const std::size_t n = batch.size();
  const std::size_t d = cfg.d_model;

  std::vector<TokenId> token_ids;
  std::vector<TokenId> positions;
  std::vector<std::uint8_t> mask;
  token_ids.reserve(n * len);
  positions.reserve(n * len);
  mask.reserve(n * len);
  for (const auto& s : batch) {
    token_ids.insert(token_ids.end(), s.token_ids.begin(), s.token_ids.end());
    mask.insert(mask.end(), s.attention_mask.begin(), s.attention_mask.end());
    for (std::size_t t = 0; t < len; ++t) positions.push_back(static_cast<TokenId>(t));
  }

  Dropout dropout(train_mode ? cfg.dropout_rate : 0.0, seed);
  Dropout* drop = train_mode && cfg.dropout_rate > 0.0 ? &dropout : nullptr;

  Tensor x = add(embedding(params.token_embeddings, token_ids),
                 embedding(params.position_embeddings, positions));  // [n*len x d]
  for (const auto& layer : params.layers) {
    Tensor q = split_heads(matmul(x, layer.wq), n, len, cfg.n_heads);
    Tensor k = split_heads(matmul(x, layer.wk), n, len, cfg.n_heads);
    Tensor v = split_heads(matmul(x, layer.wv), n, len, cfg.n_heads);
    Tensor ctx = attention(q, k, v, mask, drop, attention_probe);
    ctx = reshape(permute(ctx, {0, 2, 1, 3}), {n * len, d});
    x = layer_norm(add(x, matmul(ctx, layer.wo)), layer.ln1_gamma, layer.ln1_beta,
                   cfg.layer_norm_eps);
    Tensor hidden = gelu(matmul(x, layer.w1));
    if (drop) hidden = drop->apply(hidden);
    x = layer_norm(add(x, matmul(hidden, layer.w2)), layer.ln2_gamma, layer.ln2_beta,
                   cfg.layer_norm_eps);
  }

  if (cfg.pooling == Pooling::Cls) {
    std::vector<TokenId> cls_rows(n);
    for (std::size_t b = 0; b < n; ++b) cls_rows[b] = static_cast<TokenId>(b * len);
    return embedding(x, cls_rows);
  }
  // Mean over real (unmasked) positions.
  Vector pool = Vector::Zero(static_cast<Eigen::Index>(n * n * len));
  for (std::size_t b = 0; b < n; ++b) {
    const auto real = static_cast<Scalar>(std::max<std::size_t>(batch[b].real_length, 1));
    for (std::size_t t = 0; t < len; ++t) {
      if (mask[b * len + t]) pool[static_cast<Eigen::Index>(b * n * len + b * len + t)] = 1.0 / real;
    }
  }
  return matmul(Tensor::from({n, n * len}, std::move(pool)), x);
}

}  // namespace causal
