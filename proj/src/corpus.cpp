#include "causal/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "causal/random.hpp"

namespace causal {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

bool parse_int(std::string_view s, long long& out) {
  s = trim(s);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

std::vector<CsvRecord> parse_delimited(const std::string& content, char delimiter) {
  std::vector<CsvRecord> records;
  CsvRecord current;
  std::string field;
  bool in_quotes = false;
  bool field_quoted = false;
  bool row_has_content = false;
  std::size_t line = 1;
  current.line = 1;

  auto end_field = [&] {
    current.fields.push_back(field_quoted ? field : std::string(trim(field)));
    field.clear();
    field_quoted = false;
  };
  auto end_row = [&] {
    if (row_has_content) {
      end_field();
      records.push_back(std::move(current));
    }
    current = CsvRecord{};
    field.clear();
    field_quoted = false;
    row_has_content = false;
  };

  for (std::size_t i = 0; i < content.size(); ++i) {
    const char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"' && trim(field).empty()) {
      in_quotes = true;
      field_quoted = true;
      field.clear();
      row_has_content = true;
    } else if (c == delimiter) {
      end_field();
      row_has_content = true;
    } else if (c == '\n') {
      end_row();
      ++line;
      current.line = line;
    } else if (c != '\r') {
      field += c;
      if (c != ' ' && c != '\t') row_has_content = true;
    }
  }
  if (in_quotes) throw ParseError("unterminated quoted field", current.line);
  end_row();
  return records;
}

Corpus parse_corpus(const std::string& content, char delimiter) {
  Corpus corpus;
  const auto records = parse_delimited(content, delimiter);
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() < 3) {
      throw ParseError("expected at least 3 fields (id, text, label), got " +
                           std::to_string(rec.fields.size()),
                       rec.line);
    }
    long long label = 0;
    if (!parse_int(rec.fields[2], label)) {
      if (r == 0) continue;  // header row
      throw ParseError("label '" + rec.fields[2] + "' is not an integer", rec.line);
    }
    if (label != 0 && label != 1) {
      throw ParseError("label " + std::to_string(label) + " is not 0 or 1", rec.line);
    }
    if (trim(rec.fields[1]).empty()) throw ParseError("empty text", rec.line);
    corpus.push_back({rec.fields[0], rec.fields[1], static_cast<Label>(label)});
  }
  if (corpus.empty()) throw ParseError("no records", 0);
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, char delimiter) {
  return parse_corpus(read_file(path), delimiter);
}

std::string quote_field(const std::string& field, char delimiter) {
  const bool needs = field.find_first_of(std::string{delimiter, '"', '\n', '\r'}) !=
                         std::string::npos ||
                     trim(field) != field;
  if (!needs) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string format_corpus(const Corpus& corpus, char delimiter) {
  std::string out;
  const std::string delim(1, delimiter);
  out += "id" + delim + "text" + delim + "label\n";
  for (const auto& s : corpus) {
    out += quote_field(s.id, delimiter) + delim + quote_field(s.text, delimiter) + delim +
           std::to_string(static_cast<int>(s.label)) + "\n";
  }
  return out;
}

void write_corpus(const std::filesystem::path& path, const Corpus& corpus, char delimiter) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot write " + path.string());
  out << format_corpus(corpus, delimiter);
  if (!out) throw std::ios_base::failure("write failed for " + path.string());
}

CorpusStats compute_stats(const Corpus& corpus) {
  if (corpus.empty()) throw std::invalid_argument("compute_stats: empty corpus");
  CorpusStats stats;
  stats.n_total = corpus.size();
  stats.n_causal = static_cast<std::size_t>(
      std::count_if(corpus.begin(), corpus.end(),
                    [](const LabeledSentence& s) { return s.label == Label::Causal; }));
  stats.n_noncausal = stats.n_total - stats.n_causal;
  stats.imbalance_ratio = stats.n_causal == 0
                              ? std::numeric_limits<double>::infinity()
                              : static_cast<double>(stats.n_noncausal) /
                                    static_cast<double>(stats.n_causal);
  return stats;
}

std::string stats_json(const CorpusStats& stats) {
  nlohmann::json j;
  j["n_total"] = stats.n_total;
  j["n_causal"] = stats.n_causal;
  j["n_noncausal"] = stats.n_noncausal;
  // JSON has no infinity; null marks "no causal records".
  if (std::isinf(stats.imbalance_ratio)) {
    j["imbalance_ratio"] = nullptr;
  } else {
    j["imbalance_ratio"] = stats.imbalance_ratio;
  }
  return j.dump();
}

Split stratified_split(const Corpus& corpus, double dev_fraction, std::uint64_t seed) {
  if (!(dev_fraction > 0.0 && dev_fraction < 1.0)) {
    throw std::invalid_argument("dev_fraction must lie in (0, 1)");
  }
  std::vector<bool> in_dev(corpus.size(), false);
  for (int cls = 0; cls < 2; ++cls) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (static_cast<int>(corpus[i].label) == cls) members.push_back(i);
    }
    if (members.size() < 2) {
      throw std::invalid_argument("stratified_split: class " + std::to_string(cls) + " has " +
                                  std::to_string(members.size()) + " member(s), need >= 2");
    }
    Rng rng(derive_seed(seed, seed_stream::kSplit, static_cast<std::uint64_t>(cls)));
    std::shuffle(members.begin(), members.end(), rng);
    auto n_dev = static_cast<std::size_t>(
        std::floor(static_cast<double>(members.size()) * dev_fraction + 1e-9));
    n_dev = std::clamp<std::size_t>(n_dev, 1, members.size() - 1);
    for (std::size_t k = 0; k < n_dev; ++k) in_dev[members[k]] = true;
  }
  Split split;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    (in_dev[i] ? split.dev : split.train).push_back(corpus[i]);
  }
  return split;
}

}  // namespace causal
