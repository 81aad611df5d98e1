#include "causal/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "causal/random.hpp"

namespace causal {

namespace {

constexpr int kFormatVersion = 1;

std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::uint64_t out = 0;
    for (int i = 0; i < 8; ++i) out |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return out;
  }
}

nlohmann::ordered_json config_to_json(const EncoderConfig& c) {
  nlohmann::ordered_json j;
  j["n_layers"] = c.n_layers;
  j["n_heads"] = c.n_heads;
  j["d_model"] = c.d_model;
  j["d_ff"] = c.d_ff;
  j["vocab_size"] = c.vocab_size;
  j["max_position"] = c.max_position;
  j["dropout_rate"] = c.dropout_rate;
  j["pooling"] = std::string(to_string(c.pooling));
  j["layer_norm_eps"] = c.layer_norm_eps;
  return j;
}

EncoderConfig config_from_json(const nlohmann::json& j) {
  EncoderConfig c;
  c.n_layers = j.at("n_layers").get<std::size_t>();
  c.n_heads = j.at("n_heads").get<std::size_t>();
  c.d_model = j.at("d_model").get<std::size_t>();
  c.d_ff = j.at("d_ff").get<std::size_t>();
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.max_position = j.at("max_position").get<std::size_t>();
  c.dropout_rate = j.at("dropout_rate").get<double>();
  c.pooling = parse_pooling(j.at("pooling").get<std::string>());
  c.layer_norm_eps = j.at("layer_norm_eps").get<double>();
  c.validate();
  return c;
}

}  // namespace

std::vector<NamedTensor> Model::named_parameters() const {
  auto out = encoder.named_parameters();
  for (auto& p : head.named_parameters()) out.push_back(std::move(p));
  return out;
}

std::vector<Tensor> Model::parameters() const {
  std::vector<Tensor> out;
  for (auto& p : named_parameters()) out.push_back(p.tensor);
  return out;
}

Model Model::clone() const {
  Model m;
  m.encoder.config = encoder.config;
  m.encoder.token_embeddings = encoder.token_embeddings.clone();
  m.encoder.position_embeddings = encoder.position_embeddings.clone();
  for (const auto& l : encoder.layers) {
    m.encoder.layers.push_back({l.wq.clone(), l.wk.clone(), l.wv.clone(), l.wo.clone(),
                                l.w1.clone(), l.w2.clone(), l.ln1_gamma.clone(),
                                l.ln1_beta.clone(), l.ln2_gamma.clone(), l.ln2_beta.clone()});
  }
  m.head = {head.weight.clone(), head.bias.clone()};
  return m;
}

void Model::zero_grad() {
  for (auto& t : parameters()) t.zero_grad();
}

Model init_model(const EncoderConfig& config, std::uint64_t seed) {
  Model m;
  m.encoder = init_params(config, derive_seed(seed, seed_stream::kInit));
  m.head = init_head(config.d_model, derive_seed(seed, seed_stream::kHeadInit));
  return m;
}

void save_checkpoint(const std::filesystem::path& dir, const Model& model,
                     const CheckpointInfo& info) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json manifest;
  manifest["format"] = "causal-checkpoint";
  manifest["version"] = kFormatVersion;
  manifest["config"] = config_to_json(info.config);
  manifest["max_len"] = info.max_len;
  manifest["casing"] = std::string(to_string(info.casing));
  manifest["vocab_hash"] = info.vocab_hash;
  manifest["metadata"] = {{"seed", info.seed}, {"epoch", info.epoch}, {"alpha", info.alpha}};

  std::ofstream blob(dir / kBlobFile, std::ios::binary);
  if (!blob) throw std::ios_base::failure("cannot write " + (dir / kBlobFile).string());
  nlohmann::ordered_json index = nlohmann::ordered_json::array();
  std::size_t offset = 0;
  for (const auto& [name, tensor] : model.named_parameters()) {
    index.push_back({{"name", name}, {"shape", tensor.shape()}, {"offset", offset}});
    for (Scalar v : tensor.values()) {
      const auto bits = to_little_endian(std::bit_cast<std::uint64_t>(v));
      blob.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
    offset += tensor.size();
  }
  if (!blob) throw std::ios_base::failure("write failed for " + (dir / kBlobFile).string());
  manifest["blob"] = kBlobFile;
  manifest["total_values"] = offset;
  manifest["tensors"] = std::move(index);

  std::ofstream out(dir / kManifestFile, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot write " + (dir / kManifestFile).string());
  out << manifest.dump(2) << '\n';
  if (!out) throw std::ios_base::failure("write failed for " + (dir / kManifestFile).string());
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream in(dir / kManifestFile, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open " + (dir / kManifestFile).string());
  const auto manifest = nlohmann::json::parse(in);
  if (manifest.value("format", "") != "causal-checkpoint" ||
      manifest.value("version", 0) != kFormatVersion) {
    throw std::runtime_error("unsupported checkpoint format in " + dir.string());
  }
  Checkpoint ckpt;
  ckpt.info.config = config_from_json(manifest.at("config"));
  ckpt.info.max_len = manifest.at("max_len").get<std::size_t>();
  ckpt.info.casing = parse_casing(manifest.at("casing").get<std::string>());
  ckpt.info.vocab_hash = manifest.at("vocab_hash").get<std::string>();
  ckpt.info.seed = manifest.at("metadata").at("seed").get<std::uint64_t>();
  ckpt.info.epoch = manifest.at("metadata").at("epoch").get<std::size_t>();
  ckpt.info.alpha = manifest.at("metadata").at("alpha").get<double>();

  // Allocate with the declared shapes, then fill from the blob.
  ckpt.model = init_model(ckpt.info.config, 0);
  auto params = ckpt.model.named_parameters();
  const auto& index = manifest.at("tensors");
  if (index.size() != params.size()) {
    throw std::runtime_error("checkpoint lists " + std::to_string(index.size()) +
                             " tensors, model expects " + std::to_string(params.size()));
  }
  std::ifstream blob(dir / kBlobFile, std::ios::binary);
  if (!blob) throw std::ios_base::failure("cannot open " + (dir / kBlobFile).string());
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& [name, tensor] = params[i];
    const auto& entry = index[i];
    if (entry.at("name").get<std::string>() != name ||
        entry.at("shape").get<Shape>() != tensor.shape()) {
      throw std::runtime_error("checkpoint tensor " + std::to_string(i) + " (" +
                               entry.at("name").get<std::string>() + ") does not match " + name +
                               " " + to_string(tensor.shape()));
    }
    blob.seekg(static_cast<std::streamoff>(entry.at("offset").get<std::size_t>() * 8));
    for (auto& v : tensor.values()) {
      std::uint64_t bits = 0;
      blob.read(reinterpret_cast<char*>(&bits), sizeof bits);
      v = std::bit_cast<Scalar>(to_little_endian(bits));
    }
    if (!blob) throw std::runtime_error("checkpoint blob truncated at tensor " + name);
  }
  return ckpt;
}

}  // namespace causal
