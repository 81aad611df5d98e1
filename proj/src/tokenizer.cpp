#include "causal/tokenizer.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

namespace causal {

namespace {

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_punct(unsigned char c) { return c < 0x80 && std::ispunct(c); }

// Byte length of the UTF-8 sequence starting with `lead`; malformed bytes count as 1.
std::size_t utf8_len(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

std::vector<std::size_t> char_boundaries(std::string_view word) {
  std::vector<std::size_t> cuts;
  std::size_t i = 0;
  while (i < word.size()) {
    cuts.push_back(i);
    i = std::min(word.size(), i + utf8_len(static_cast<unsigned char>(word[i])));
  }
  cuts.push_back(word.size());
  return cuts;
}

std::string strip_continuation(const std::string& token) {
  if (token.starts_with(Vocabulary::kContinuation)) {
    return token.substr(Vocabulary::kContinuation.size());
  }
  return token;
}

}  // namespace

std::string_view to_string(Casing casing) {
  return casing == Casing::Cased ? "cased" : "uncased";
}

Casing parse_casing(std::string_view name) {
  if (name == "cased") return Casing::Cased;
  if (name == "uncased") return Casing::Uncased;
  throw std::invalid_argument("unknown casing '" + std::string(name) + "'");
}

const std::vector<std::string>& Vocabulary::special_tokens() {
  static const std::vector<std::string> specials{"[PAD]", "[UNK]", "[CLS]", "[SEP]"};
  return specials;
}

Vocabulary::Vocabulary(Casing casing) : casing_(casing) {
  for (const auto& s : special_tokens()) add(s);
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens, Casing casing) {
  const auto& specials = special_tokens();
  if (tokens.size() < kNumSpecial || !std::equal(specials.begin(), specials.end(), tokens.begin())) {
    throw std::invalid_argument("vocabulary must start with [PAD], [UNK], [CLS], [SEP]");
  }
  Vocabulary vocab(casing);
  for (std::size_t i = kNumSpecial; i < tokens.size(); ++i) {
    if (tokens[i].empty()) {
      throw std::invalid_argument("empty token at id " + std::to_string(i));
    }
    if (vocab.contains(tokens[i])) {
      throw std::invalid_argument("duplicate token '" + tokens[i] + "' at id " +
                                  std::to_string(i));
    }
    vocab.add(tokens[i]);
  }
  return vocab;
}

TokenId Vocabulary::add(const std::string& token) {
  if (auto it = index_.find(token); it != index_.end()) return it->second;
  const auto id = static_cast<TokenId>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, id);
  return id;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.contains(std::string(token));
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  if (auto it = index_.find(std::string(token)); it != index_.end()) return it->second;
  return std::nullopt;
}

const std::string& Vocabulary::token(TokenId id) const {
  return tokens_.at(static_cast<std::size_t>(id));
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  feed(to_string(casing_));
  for (const auto& t : tokens_) {
    feed("\n");
    feed(t);
  }
  return h;
}

std::string Vocabulary::hash_hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
  return buf;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot write " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
  if (!out) throw std::ios_base::failure("write failed for " + path.string());
}

Vocabulary Vocabulary::load(const std::filesystem::path& path, Casing casing) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  return from_tokens(std::move(tokens), casing);
}

std::string casefold(std::string_view text) {
  std::string out(text);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::vector<std::string> pre_tokenize(std::string_view text, Casing casing) {
  const std::string folded = casing == Casing::Uncased ? casefold(text) : std::string(text);
  std::vector<std::string> words;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) words.push_back(std::move(current));
    current.clear();
  };
  for (unsigned char c : folded) {
    if (is_space(c)) {
      flush();
    } else if (is_punct(c)) {
      flush();
      words.emplace_back(1, static_cast<char>(c));
    } else {
      current += static_cast<char>(c);
    }
  }
  flush();
  return words;
}

std::vector<std::string> segment_word(const Vocabulary& vocab, std::string_view word) {
  const auto cuts = char_boundaries(word);
  std::vector<std::string> pieces;
  std::size_t start = 0;  // index into cuts
  const std::size_t last = cuts.size() - 1;
  while (start < last) {
    std::size_t end = last;
    std::string match;
    for (; end > start; --end) {
      std::string piece(word.substr(cuts[start], cuts[end] - cuts[start]));
      if (start > 0) piece.insert(0, Vocabulary::kContinuation);
      if (vocab.contains(piece)) {
        match = std::move(piece);
        break;
      }
    }
    if (end == start) return {Vocabulary::special_tokens()[Vocabulary::kUnk]};
    pieces.push_back(std::move(match));
    start = end;
  }
  return pieces;
}

EncodedSequence encode(const Vocabulary& vocab, std::string_view text, std::size_t max_len) {
  if (max_len < 3) throw std::invalid_argument("encode: max_len must be >= 3");
  EncodedSequence seq;
  seq.token_ids.reserve(max_len);
  seq.token_ids.push_back(Vocabulary::kCls);
  const std::size_t budget = max_len - 2;
  for (const auto& word : pre_tokenize(text, vocab.casing())) {
    if (seq.token_ids.size() - 1 >= budget) break;
    for (const auto& piece : segment_word(vocab, word)) {
      if (seq.token_ids.size() - 1 >= budget) break;
      seq.token_ids.push_back(vocab.find(piece).value_or(Vocabulary::kUnk));
    }
  }
  seq.token_ids.push_back(Vocabulary::kSep);
  seq.real_length = seq.token_ids.size();
  seq.token_ids.resize(max_len, Vocabulary::kPad);
  seq.attention_mask.assign(max_len, 0);
  std::fill_n(seq.attention_mask.begin(), seq.real_length, 1);
  return seq;
}

double coverage(const Vocabulary& vocab, const Corpus& corpus) {
  std::size_t total = 0;
  std::size_t known = 0;
  for (const auto& s : corpus) {
    for (const auto& word : pre_tokenize(s.text, vocab.casing())) {
      ++total;
      const auto pieces = segment_word(vocab, word);
      if (!(pieces.size() == 1 && pieces[0] == Vocabulary::special_tokens()[Vocabulary::kUnk])) {
        ++known;
      }
    }
  }
  return total == 0 ? 1.0 : static_cast<double>(known) / static_cast<double>(total);
}

// --- vocabulary induction -------------------------------------------------

namespace {

class PairMerger {
 public:
  PairMerger(const std::map<std::string, std::size_t>& word_counts) {
    for (const auto& [word, count] : word_counts) {
      const auto cuts = char_boundaries(word);
      std::vector<int> symbols;
      for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        std::string piece = word.substr(cuts[i], cuts[i + 1] - cuts[i]);
        if (i > 0) piece.insert(0, Vocabulary::kContinuation);
        symbols.push_back(intern(piece));
      }
      words_.push_back({std::move(symbols), count});
    }
    for (std::size_t w = 0; w < words_.size(); ++w) add_pairs(w);
  }

  // Alphabet symbols with their corpus frequency.
  std::vector<std::pair<std::string, std::size_t>> alphabet() const {
    std::vector<std::size_t> freq(names_.size(), 0);
    for (const auto& w : words_) {
      for (int s : w.symbols) freq[static_cast<std::size_t>(s)] += w.count;
    }
    std::vector<std::pair<std::string, std::size_t>> out;
    for (std::size_t i = 0; i < names_.size(); ++i) out.emplace_back(names_[i], freq[i]);
    return out;
  }

  // Best pair as (count, merged token); nullopt when no pairs remain.
  std::optional<std::pair<std::size_t, std::string>> best() const {
    if (ranking_.empty()) return std::nullopt;
    const auto& top = *ranking_.begin();
    return std::make_pair(top.count, names_[static_cast<std::size_t>(top.left)] +
                                         strip_continuation(names_[static_cast<std::size_t>(top.right)]));
  }

  void merge_best() {
    const Entry top = *ranking_.begin();
    const std::string merged = names_[static_cast<std::size_t>(top.left)] +
                               strip_continuation(names_[static_cast<std::size_t>(top.right)]);
    const int merged_id = intern(merged);
    const auto key = pair_key(top.left, top.right);
    std::vector<std::size_t> candidates = occurrences_[key];
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    for (std::size_t w : candidates) {
      auto& syms = words_[w].symbols;
      bool present = false;
      for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
        if (syms[i] == top.left && syms[i + 1] == top.right) present = true;
      }
      if (!present) continue;
      remove_pairs(w);
      std::vector<int> next;
      for (std::size_t i = 0; i < syms.size(); ++i) {
        if (i + 1 < syms.size() && syms[i] == top.left && syms[i + 1] == top.right) {
          next.push_back(merged_id);
          ++i;
        } else {
          next.push_back(syms[i]);
        }
      }
      syms = std::move(next);
      add_pairs(w);
    }
  }

 private:
  struct Word {
    std::vector<int> symbols;
    std::size_t count;
  };
  struct Entry {
    std::size_t count;
    int left;
    int right;
  };
  struct Order {
    const std::vector<std::string>* names;
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.count != b.count) return a.count > b.count;
      const auto& n = *names;
      if (a.left != b.left) return n[static_cast<std::size_t>(a.left)] < n[static_cast<std::size_t>(b.left)];
      return n[static_cast<std::size_t>(a.right)] < n[static_cast<std::size_t>(b.right)];
    }
  };

  static std::uint64_t pair_key(int a, int b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
  }

  int intern(const std::string& name) {
    if (auto it = ids_.find(name); it != ids_.end()) return it->second;
    const int id = static_cast<int>(names_.size());
    names_.push_back(name);
    ids_.emplace(name, id);
    return id;
  }

  void bump(int a, int b, std::size_t w, long long delta) {
    const auto key = pair_key(a, b);
    auto& c = counts_[key];
    if (c > 0) ranking_.erase(Entry{c, a, b});
    c = static_cast<std::size_t>(static_cast<long long>(c) + delta);
    if (c > 0) {
      ranking_.insert(Entry{c, a, b});
    } else {
      counts_.erase(key);
    }
    if (delta > 0) occurrences_[key].push_back(w);
  }

  void add_pairs(std::size_t w) {
    const auto& s = words_[w].symbols;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
      bump(s[i], s[i + 1], w, static_cast<long long>(words_[w].count));
    }
  }

  void remove_pairs(std::size_t w) {
    const auto& s = words_[w].symbols;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
      bump(s[i], s[i + 1], w, -static_cast<long long>(words_[w].count));
    }
  }

  std::vector<std::string> names_;
  std::unordered_map<std::string, int> ids_;
  std::vector<Word> words_;
  std::unordered_map<std::uint64_t, std::size_t> counts_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> occurrences_;
  std::set<Entry, Order> ranking_{Order{&names_}};
};

}  // namespace

Vocabulary build_vocab(const Corpus& corpus, std::size_t max_size, std::size_t min_freq,
                       Casing casing) {
  if (max_size <= Vocabulary::kNumSpecial) {
    throw std::invalid_argument("build_vocab: max_size must exceed the 4 special tokens");
  }
  if (corpus.empty()) throw std::invalid_argument("build_vocab: empty corpus");
  min_freq = std::max<std::size_t>(min_freq, 1);

  std::map<std::string, std::size_t> word_counts;
  for (const auto& s : corpus) {
    for (auto& w : pre_tokenize(s.text, casing)) ++word_counts[w];
  }

  Vocabulary vocab(casing);
  PairMerger merger(word_counts);

  auto alphabet = merger.alphabet();
  std::sort(alphabet.begin(), alphabet.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  for (const auto& [symbol, freq] : alphabet) {
    if (vocab.size() >= max_size) break;
    if (freq >= min_freq) vocab.add(symbol);
  }

  while (vocab.size() < max_size) {
    const auto best = merger.best();
    if (!best || best->first < min_freq) break;
    vocab.add(best->second);
    merger.merge_best();
  }
  return vocab;
}

}  // namespace causal
