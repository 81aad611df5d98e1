#include <filesystem>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "causal/tokenizer.hpp"
#include "support/synthetic.hpp"

namespace causal {
namespace {

Corpus sentences(std::initializer_list<const char*> texts) {
  Corpus c;
  int i = 0;
  for (const char* t : texts) c.push_back({std::to_string(i++), t, Label::NonCausal});
  return c;
}

Vocabulary vocab_of(std::vector<std::string> extra, Casing casing = Casing::Cased) {
  std::vector<std::string> tokens = Vocabulary::special_tokens();
  tokens.insert(tokens.end(), extra.begin(), extra.end());
  return Vocabulary::from_tokens(tokens, casing);
}

std::string random_text(std::mt19937_64& rng) {
  static const std::string alphabet =
      "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 .,;!?'-()   ";
  const std::size_t len = rng() % 400;
  std::string s;
  for (std::size_t i = 0; i < len; ++i) s += alphabet[rng() % alphabet.size()];
  return s;
}

TEST(BuildVocab, HandRunOnTwoSentences) {
  // Alphabet by frequency: a(3) ##a(2) ##b(1); merges: (a,##a) x2 -> "aa",
  // then (a,##b) x1 -> "ab".
  const Vocabulary v = build_vocab(sentences({"aa aa", "ab"}), 20, 1, Casing::Cased);
  const std::vector<std::string> expected{"[PAD]", "[UNK]", "[CLS]", "[SEP]", "a",
                                          "##a",   "##b",   "aa",    "ab"};
  EXPECT_EQ(v.tokens(), expected);
  EXPECT_TRUE(v.contains("aa"));
  EXPECT_EQ(segment_word(v, "ab"), std::vector<std::string>{"ab"});
}

TEST(BuildVocab, CapacityBoundsMerges) {
  const Vocabulary v = build_vocab(sentences({"aa aa", "ab"}), 8, 1, Casing::Cased);
  EXPECT_EQ(v.size(), 8u);
  EXPECT_TRUE(v.contains("aa"));
  EXPECT_FALSE(v.contains("ab"));
  EXPECT_EQ(segment_word(v, "ab"), (std::vector<std::string>{"a", "##b"}));
}

TEST(BuildVocab, MinFreqStopsRareMerges) {
  const Vocabulary v = build_vocab(sentences({"aa aa", "ab"}), 20, 2, Casing::Cased);
  EXPECT_TRUE(v.contains("aa"));
  EXPECT_FALSE(v.contains("##b"));
  EXPECT_FALSE(v.contains("ab"));
}

TEST(BuildVocab, SpecialsOnlyCapacityIsError) {
  EXPECT_THROW(build_vocab(sentences({"x"}), 4, 1, Casing::Cased), std::invalid_argument);
}

TEST(BuildVocab, Deterministic) {
  const Corpus c = testing::synthetic_corpus({.n_causal = 50, .n_noncausal = 50, .seed = 9});
  EXPECT_EQ(build_vocab(c, 300, 2, Casing::Cased).tokens(),
            build_vocab(c, 300, 2, Casing::Cased).tokens());
}

TEST(BuildVocab, DenseUniqueIds) {
  const Corpus c = testing::synthetic_corpus({.n_causal = 40, .n_noncausal = 40, .seed = 2});
  const Vocabulary v = build_vocab(c, 250, 1, Casing::Uncased);
  std::set<std::string> seen;
  for (std::size_t i = 0; i < v.size(); ++i) {
    EXPECT_FALSE(v.token(static_cast<TokenId>(i)).empty());
    EXPECT_TRUE(seen.insert(v.token(static_cast<TokenId>(i))).second);
    EXPECT_EQ(*v.find(v.token(static_cast<TokenId>(i))), static_cast<TokenId>(i));
  }
  for (const auto& t : v.tokens()) {
    if (t.starts_with("[")) continue;
    EXPECT_EQ(t, casefold(t));
  }
}

TEST(Vocabulary, FileRoundTripAndValidation) {
  const auto path = std::filesystem::temp_directory_path() / "causal_vocab_rt.txt";
  const Vocabulary v = vocab_of({"un", "##able", "x"});
  v.save(path);
  const Vocabulary back = Vocabulary::load(path, Casing::Cased);
  EXPECT_EQ(back.tokens(), v.tokens());
  EXPECT_EQ(back.hash(), v.hash());
  EXPECT_NE(Vocabulary::load(path, Casing::Uncased).hash(), v.hash());
  std::filesystem::remove(path);

  EXPECT_THROW(Vocabulary::from_tokens({"[UNK]", "[PAD]", "[CLS]", "[SEP]"}, Casing::Cased),
               std::invalid_argument);
  EXPECT_THROW(vocab_of({"a", "a"}), std::invalid_argument);
  EXPECT_THROW(vocab_of({""}), std::invalid_argument);
}

TEST(SegmentWord, LongestMatchWalk) {
  const Vocabulary v = vocab_of({"un", "##able"});
  EXPECT_EQ(segment_word(v, "unable"), (std::vector<std::string>{"un", "##able"}));
}

TEST(SegmentWord, WholeWordInVocab) {
  const Vocabulary v = vocab_of({"profit", "pro", "##fit"});
  EXPECT_EQ(segment_word(v, "profit"), std::vector<std::string>{"profit"});
}

TEST(SegmentWord, NoMatchingPrefixIsUnk) {
  const Vocabulary v = vocab_of({"un", "##able"});
  EXPECT_EQ(segment_word(v, "xyz"), std::vector<std::string>{"[UNK]"});
  // A partial decomposition is still UNK for the whole word.
  EXPECT_EQ(segment_word(v, "unxyz"), std::vector<std::string>{"[UNK]"});
}

TEST(SegmentWord, ConcatenationReproducesWord) {
  const Corpus c = testing::synthetic_corpus({.n_causal = 60, .n_noncausal = 60, .seed = 5});
  const Vocabulary v = build_vocab(c, 200, 1, Casing::Cased);
  for (const auto& s : c) {
    for (const auto& w : pre_tokenize(s.text, Casing::Cased)) {
      const auto pieces = segment_word(v, w);
      ASSERT_NE(pieces.front(), "[UNK]") << w;
      std::string joined;
      for (std::size_t i = 0; i < pieces.size(); ++i) {
        joined += i == 0 ? pieces[i] : pieces[i].substr(2);
        if (i > 0) EXPECT_TRUE(pieces[i].starts_with("##"));
      }
      EXPECT_EQ(joined, w);
    }
  }
}

TEST(PreTokenize, PunctuationSplitsAndCasing) {
  EXPECT_EQ(pre_tokenize("Profit, rose (sharply)!", Casing::Cased),
            (std::vector<std::string>{"Profit", ",", "rose", "(", "sharply", ")", "!"}));
  EXPECT_EQ(pre_tokenize("  Since  MORNING ", Casing::Uncased),
            (std::vector<std::string>{"since", "morning"}));
}

TEST(Encode, EmptyText) {
  const auto e = encode(vocab_of({"a"}), "", 8);
  EXPECT_EQ(e.token_ids, (std::vector<TokenId>{2, 3, 0, 0, 0, 0, 0, 0}));
  EXPECT_EQ(e.real_length, 2u);
  EXPECT_EQ(e.attention_mask, (std::vector<std::uint8_t>{1, 1, 0, 0, 0, 0, 0, 0}));
}

TEST(Encode, LongSentenceTruncatesKeepingSep) {
  std::string text;
  for (int i = 0; i < 200; ++i) text += "word ";
  const auto e = encode(vocab_of({"word"}), text, 128);
  EXPECT_EQ(e.real_length, 128u);
  EXPECT_EQ(e.token_ids.size(), 128u);
  EXPECT_EQ(e.token_ids.front(), Vocabulary::kCls);
  EXPECT_EQ(e.token_ids.back(), Vocabulary::kSep);
}

TEST(Encode, UnknownWordIsSingleUnk) {
  const auto e = encode(vocab_of({"sales", "fell"}), "sales zzqx fell", 8);
  EXPECT_EQ(e.token_ids, (std::vector<TokenId>{2, 4, 1, 5, 3, 0, 0, 0}));
}

TEST(Encode, MaxLenBelowThreeIsError) {
  EXPECT_THROW(encode(vocab_of({"a"}), "a", 2), std::invalid_argument);
}

TEST(Encode, RandomStringsKeepLayoutInvariants) {
  const Corpus c = testing::synthetic_corpus({.n_causal = 30, .n_noncausal = 30, .seed = 8});
  const Vocabulary v = build_vocab(c, 120, 1, Casing::Cased);
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::string text = random_text(rng);
    const std::size_t max_len = 3 + rng() % 100;
    const auto e = encode(v, text, max_len);
    ASSERT_EQ(e.token_ids.size(), max_len);
    ASSERT_EQ(e.attention_mask.size(), max_len);
    ASSERT_LE(e.real_length, max_len);
    EXPECT_EQ(e.token_ids[0], Vocabulary::kCls);
    EXPECT_EQ(e.token_ids[e.real_length - 1], Vocabulary::kSep);
    for (std::size_t i = 0; i < max_len; ++i) {
      EXPECT_EQ(e.attention_mask[i], i < e.real_length ? 1 : 0);
      EXPECT_EQ(e.attention_mask[i] == 1, e.token_ids[i] != Vocabulary::kPad);
    }
  }
}

TEST(Encode, ShorterMaxLenIsPrefix) {
  const Corpus c = testing::synthetic_corpus({.n_causal = 30, .n_noncausal = 30, .seed = 3});
  const Vocabulary v = build_vocab(c, 150, 1, Casing::Cased);
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 300; ++trial) {
    const std::string text = random_text(rng);
    const std::size_t l1 = 3 + rng() % 40;
    const std::size_t l2 = l1 + 1 + rng() % 40;
    const auto a = encode(v, text, l1);
    const auto b = encode(v, text, l2);
    // Real tokens of the short encoding, minus its final SEP, prefix the long one.
    for (std::size_t i = 0; i + 1 < a.real_length; ++i) EXPECT_EQ(a.token_ids[i], b.token_ids[i]);
    EXPECT_LE(a.real_length, b.real_length);
  }
}

TEST(Encode, UncasedIgnoresCase) {
  const Corpus c = testing::synthetic_corpus({.n_causal = 30, .n_noncausal = 30, .seed = 1});
  const Vocabulary v = build_vocab(c, 150, 1, Casing::Uncased);
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 300; ++trial) {
    const std::string text = random_text(rng);
    EXPECT_EQ(encode(v, text, 64).token_ids, encode(v, casefold(text), 64).token_ids);
  }
}

TEST(Encode, CasedDistinguishesCase) {
  const Vocabulary v = vocab_of({"since", "Since"});
  EXPECT_NE(encode(v, "Since", 4).token_ids, encode(v, "since", 4).token_ids);
}

TEST(Coverage, TrainingCorpusAtLeastHeldOut) {
  const Corpus train = testing::synthetic_corpus({.n_causal = 40, .n_noncausal = 40, .seed = 1});
  Corpus heldout = testing::synthetic_corpus({.n_causal = 20, .n_noncausal = 20, .seed = 77});
  heldout.push_back({"x", "Quarterly EBITDA outlook unchanged", Label::NonCausal});
  const Vocabulary v = build_vocab(train, 60, 3, Casing::Cased);
  EXPECT_GE(coverage(v, train), coverage(v, heldout));
}

}  // namespace
}  // namespace causal
