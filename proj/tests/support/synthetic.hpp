#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "causal/corpus.hpp"

namespace causal::testing {

// Financial-flavoured synthetic sentences. Causal sentences join two clauses
// with an explicit causal connective; non-causal ones never contain one.
struct SyntheticOptions {
  std::size_t n_causal = 32;
  std::size_t n_noncausal = 32;
  // Probability that a non-causal sentence carries a temporal connective
  // ("after", "since") that shares surface position with causal triggers.
  double confounder_rate = 0.0;
  // Probability of flipping a label after generation.
  double label_noise = 0.0;
  std::size_t min_words = 4;
  std::size_t max_words = 9;
  std::uint64_t seed = 1;
};

inline Corpus synthetic_corpus(const SyntheticOptions& opt) {
  static const std::vector<std::string> subjects{
      "Revenue", "Profit", "The company", "Net income", "Operating margin", "The bank",
      "Shares", "The group", "Earnings", "Sales", "The fund", "Investors"};
  static const std::vector<std::string> fillers{
      "rose", "fell", "in", "the", "quarter", "percent", "year", "market", "growth",
      "costs", "reported", "dividend", "board", "rates", "demand", "prices", "strong",
      "weak", "lower", "higher", "segment", "results", "forecast", "million", "billion",
      "second", "first", "annual", "exports", "retail"};
  static const std::vector<std::string> triggers{"because", "due to", "as a result of",
                                                 "caused by", "owing to", "thanks to"};
  static const std::vector<std::string> temporal{"after", "since", "while", "before"};

  std::mt19937_64 rng(opt.seed);
  auto pick = [&rng](const std::vector<std::string>& v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
  };
  auto clause = [&](std::size_t words) {
    std::string s;
    for (std::size_t i = 0; i < words; ++i) {
      if (i) s += ' ';
      s += pick(fillers);
    }
    return s;
  };
  auto length = [&] {
    return std::uniform_int_distribution<std::size_t>(opt.min_words, opt.max_words)(rng);
  };
  std::bernoulli_distribution confound(opt.confounder_rate);
  std::bernoulli_distribution flip(opt.label_noise);

  Corpus corpus;
  std::size_t c = 0, n = 0;
  std::size_t id = 0;
  while (c < opt.n_causal || n < opt.n_noncausal) {
    // Interleave deterministically, weighted by remaining counts.
    const std::size_t remaining = (opt.n_causal - c) + (opt.n_noncausal - n);
    const bool causal =
        std::uniform_int_distribution<std::size_t>(1, remaining)(rng) <= opt.n_causal - c;
    std::string text = pick(subjects) + " " + clause(length() / 2 + 1);
    if (causal) {
      text += " " + pick(triggers) + " " + clause(length() / 2 + 1);
      ++c;
    } else {
      if (confound(rng)) text += " " + pick(temporal) + " " + clause(length() / 2 + 1);
      else text += " " + clause(length() / 2 + 1);
      ++n;
    }
    text += ".";
    Label label = causal ? Label::Causal : Label::NonCausal;
    if (flip(rng)) label = label == Label::Causal ? Label::NonCausal : Label::Causal;
    corpus.push_back({"s" + std::to_string(id++), text, label});
  }
  return corpus;
}

}  // namespace causal::testing
