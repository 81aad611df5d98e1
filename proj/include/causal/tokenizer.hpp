#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "causal/corpus.hpp"

namespace causal {

enum class Casing { Cased, Uncased };

std::string_view to_string(Casing casing);
Casing parse_casing(std::string_view name);

using TokenId = std::int64_t;

/// Subword inventory. Ids are dense; ids 0-3 are the special tokens.
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr TokenId kCls = 2;
  static constexpr TokenId kSep = 3;
  static constexpr std::size_t kNumSpecial = 4;
  static constexpr std::string_view kContinuation = "##";
  static const std::vector<std::string>& special_tokens();

  explicit Vocabulary(Casing casing = Casing::Cased);

  /// Validates that `tokens` starts with the specials, has no duplicates,
  /// and holds no empty entries.
  static Vocabulary from_tokens(std::vector<std::string> tokens, Casing casing);

  /// Appends a token; returns its id. No-op returning the existing id when present.
  TokenId add(const std::string& token);

  std::size_t size() const { return tokens_.size(); }
  Casing casing() const { return casing_; }
  bool contains(std::string_view token) const;
  std::optional<TokenId> find(std::string_view token) const;
  const std::string& token(TokenId id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// FNV-1a over the token list and casing; used to bind checkpoints to a vocabulary.
  std::uint64_t hash() const;
  std::string hash_hex() const;

  /// One token per line, line index = id.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path, Casing casing);

 private:
  Casing casing_;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

struct EncodedSequence {
  std::vector<TokenId> token_ids;
  std::vector<std::uint8_t> attention_mask;
  std::size_t real_length = 0;

  std::size_t max_len() const { return token_ids.size(); }
};

/// ASCII case folding; non-ASCII bytes pass through.
std::string casefold(std::string_view text);

/// Whitespace split, then every ASCII punctuation character becomes its own
/// word. Case-folds first under Casing::Uncased.
std::vector<std::string> pre_tokenize(std::string_view text, Casing casing);

/// Frequency-thresholded pair merging. The alphabet (word-initial characters
/// and "##"-prefixed continuation characters seen at least `min_freq` times)
/// is added by descending frequency, then the most frequent adjacent pair is
/// merged repeatedly until `max_size` is reached or no pair reaches `min_freq`.
/// Ties break lexicographically.
Vocabulary build_vocab(const Corpus& corpus, std::size_t max_size, std::size_t min_freq,
                       Casing casing);

/// Greedy longest-prefix match. Returns {"[UNK]"} when the word has no full
/// decomposition.
std::vector<std::string> segment_word(const Vocabulary& vocab, std::string_view word);

/// [CLS] pieces... [SEP] then PAD up to `max_len`. Pieces past max_len - 2 are
/// dropped from the tail; SEP is always the last real token.
EncodedSequence encode(const Vocabulary& vocab, std::string_view text, std::size_t max_len);

/// Fraction of pre-tokenized words that segment without UNK.
double coverage(const Vocabulary& vocab, const Corpus& corpus);

}  // namespace causal
