#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace causal {

enum class Label : int { NonCausal = 0, Causal = 1 };

struct LabeledSentence {
  std::string id;
  std::string text;
  Label label = Label::NonCausal;

  friend bool operator==(const LabeledSentence&, const LabeledSentence&) = default;
};

using Corpus = std::vector<LabeledSentence>;

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct CorpusStats {
  std::size_t n_total = 0;
  std::size_t n_causal = 0;
  std::size_t n_noncausal = 0;
  /// n_noncausal / n_causal; +infinity when there are no causal records.
  double imbalance_ratio = 0.0;
};

struct Split {
  Corpus train;
  Corpus dev;
};

/// One parsed delimiter-separated record, with the line it started on.
struct CsvRecord {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

/// Splits delimiter-separated text into records. Fields may be quoted with `"`;
/// inside quotes the delimiter and newlines are literal and `""` is a quote.
/// Blank lines are skipped.
std::vector<CsvRecord> parse_delimited(const std::string& content, char delimiter);

/// Reads `id<delim>text<delim>label` records. A first row whose label field is
/// not numeric is treated as a header. Fields past the third are ignored.
Corpus load_corpus(const std::filesystem::path& path, char delimiter = ';');
Corpus parse_corpus(const std::string& content, char delimiter = ';');

void write_corpus(const std::filesystem::path& path, const Corpus& corpus, char delimiter = ';');
std::string format_corpus(const Corpus& corpus, char delimiter = ';');

/// Quotes a field when it contains the delimiter, a quote, or a line break.
std::string quote_field(const std::string& field, char delimiter);

CorpusStats compute_stats(const Corpus& corpus);
std::string stats_json(const CorpusStats& stats);

/// Per-class seeded shuffle; each class contributes floor(n * dev_fraction)
/// records to dev, clamped to [1, n-1]. Both outputs keep corpus order.
Split stratified_split(const Corpus& corpus, double dev_fraction, std::uint64_t seed);

}  // namespace causal
