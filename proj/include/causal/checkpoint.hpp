#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "causal/classifier.hpp"
#include "causal/encoder.hpp"
#include "causal/tokenizer.hpp"

namespace causal {

/// Encoder plus classification head.
struct Model {
  EncoderParams encoder;
  HeadParams head;

  /// Encoder tensors in declaration order, then head weight and bias.
  std::vector<NamedTensor> named_parameters() const;
  std::vector<Tensor> parameters() const;
  /// Deep copy with independent storage.
  Model clone() const;
  void zero_grad();
};

Model init_model(const EncoderConfig& config, std::uint64_t seed);

struct CheckpointInfo {
  EncoderConfig config;
  std::size_t max_len = 0;
  Casing casing = Casing::Cased;
  std::string vocab_hash;
  std::uint64_t seed = 0;
  std::size_t epoch = 0;  // 0 = initial parameters
  double alpha = 1.0;
};

struct Checkpoint {
  Model model;
  CheckpointInfo info;
};

inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kBlobFile = "params.bin";

/// Writes `dir/manifest.json` (config, vocab hash, metadata, tensor index)
/// and `dir/params.bin` (all tensors, little-endian float64, declared order).
/// Output bytes depend only on the arguments.
void save_checkpoint(const std::filesystem::path& dir, const Model& model,
                     const CheckpointInfo& info);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace causal
