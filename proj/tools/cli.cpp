#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "causal/checkpoint.hpp"
#include "causal/corpus.hpp"
#include "causal/sweep.hpp"
#include "causal/tokenizer.hpp"
#include "causal/trainer.hpp"

namespace causal::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string data;
  std::string dev;
  std::string vocab;
  std::string heldout;
  std::string checkpoint;
  std::string out_dir = "out";
  std::string out;
  std::string casing = "cased";
  std::string profile = "tiny";
  std::string pooling = "cls";
  char delimiter = ';';
  std::size_t vocab_size = 4000;
  std::size_t min_freq = 2;
  std::size_t max_len = 128;
  std::optional<double> alpha;
  std::size_t epochs = 10;
  std::size_t batch_size = 16;
  double lr = 1e-3;
  std::uint64_t seed = 42;
  double dev_fraction = 0.2;
  std::optional<double> clip_norm;
  std::optional<double> dropout;
  std::vector<std::size_t> lengths;
  std::vector<std::string> profiles;
};

void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot write " + path.string());
  out << content;
  if (!out) throw std::ios_base::failure("write failed for " + path.string());
}

TrainConfig train_config(const Options& o) {
  TrainConfig c;
  c.epochs = o.epochs;
  c.batch_size = o.batch_size;
  c.learning_rate = o.lr;
  c.alpha = o.alpha;
  c.max_len = o.max_len;
  c.seed = o.seed;
  c.clip_norm = o.clip_norm;
  c.profile = o.profile;
  c.pooling = parse_pooling(o.pooling);
  c.dropout_rate = o.dropout;
  c.validate();
  return c;
}

Split train_dev(const Options& o) {
  Corpus corpus = load_corpus(o.data, o.delimiter);
  if (!o.dev.empty()) return {std::move(corpus), load_corpus(o.dev, o.delimiter)};
  return stratified_split(corpus, o.dev_fraction, o.seed);
}

Vocabulary vocab_for(const Options& o, const Corpus& train_split, const fs::path& out_dir,
                     std::ostream& out) {
  const Casing casing = parse_casing(o.casing);
  if (!o.vocab.empty()) return Vocabulary::load(o.vocab, casing);
  Vocabulary vocab = build_vocab(train_split, o.vocab_size, o.min_freq, casing);
  fs::create_directories(out_dir);
  vocab.save(out_dir / "vocab.txt");
  out << fmt::format("built vocabulary of {} tokens -> {}\n", vocab.size(),
                     (out_dir / "vocab.txt").string());
  return vocab;
}

Corpus read_unlabeled(const std::string& path, char delimiter) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  Corpus rows;
  const auto records = parse_delimited(buf.str(), delimiter);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    if (rec.fields.size() < 2) {
      throw ParseError("expected id and text fields, got " + std::to_string(rec.fields.size()),
                       rec.line);
    }
    if (i == 0 && rec.fields[0] == "id" && rec.fields[1] == "text") continue;
    rows.push_back({rec.fields[0], rec.fields[1], Label::NonCausal});
  }
  if (rows.empty()) throw ParseError("no records", 0);
  return rows;
}

int cmd_stats(const Options& o, std::ostream& out) {
  out << stats_json(compute_stats(load_corpus(o.data, o.delimiter))) << '\n';
  return 0;
}

int cmd_split(const Options& o, std::ostream& out) {
  const auto split = stratified_split(load_corpus(o.data, o.delimiter), o.dev_fraction, o.seed);
  const fs::path dir = o.out_dir;
  fs::create_directories(dir);
  write_corpus(dir / "train.csv", split.train, o.delimiter);
  write_corpus(dir / "dev.csv", split.dev, o.delimiter);
  out << fmt::format("train: {} records, dev: {} records -> {}\n", split.train.size(),
                     split.dev.size(), dir.string());
  return 0;
}

int cmd_build_vocab(const Options& o, std::ostream& out) {
  const Corpus corpus = load_corpus(o.data, o.delimiter);
  const Vocabulary vocab = build_vocab(corpus, o.vocab_size, o.min_freq, parse_casing(o.casing));
  const fs::path path = o.vocab.empty() ? fs::path(o.out_dir) / "vocab.txt" : fs::path(o.vocab);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  vocab.save(path);
  out << fmt::format("vocabulary: {} tokens -> {}\n", vocab.size(), path.string());
  out << fmt::format("coverage (corpus): {:.6f}\n", coverage(vocab, corpus));
  if (!o.heldout.empty()) {
    out << fmt::format("coverage (held-out): {:.6f}\n",
                       coverage(vocab, load_corpus(o.heldout, o.delimiter)));
  }
  return 0;
}

int cmd_train(const Options& o, std::ostream& out) {
  const TrainConfig config = train_config(o);
  const fs::path dir = o.out_dir;
  const Split split = train_dev(o);
  const Vocabulary vocab = vocab_for(o, split.train, dir, out);

  auto result = train(split.train, split.dev, vocab, config);
  const fs::path ckpt = dir / "checkpoint";
  save_checkpoint(ckpt, result.model, result.info);
  result.report.checkpoint_path = ckpt.string();

  write_corpus(dir / "train_split.csv", split.train, o.delimiter);
  write_corpus(dir / "dev_split.csv", split.dev, o.delimiter);
  write_text(dir / "train_report.json", report_to_json(result.report).dump(2) + "\n");
  const std::string table = report_table(result.report);
  write_text(dir / "train_report.txt", table);
  if (!split.dev.empty()) {
    const auto ev = evaluate(result.model, split.dev, vocab, config.max_len);
    write_text(dir / "dev_predictions.csv", format_predictions(ev.predictions, o.delimiter));
  }
  out << table;
  out << fmt::format("checkpoint -> {}\n", ckpt.string());
  return 0;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(o.checkpoint);
  const Vocabulary vocab = Vocabulary::load(o.vocab, ckpt.info.casing);
  check_vocab(ckpt.info, vocab);
  const std::size_t max_len = o.max_len == 0 ? ckpt.info.max_len : o.max_len;
  const auto ev = evaluate(ckpt, load_corpus(o.data, o.delimiter), vocab, max_len);
  const fs::path dir = o.out_dir;
  write_text(dir / "metrics.json", metrics_json(ev.metrics) + "\n");
  write_text(dir / "predictions.csv", format_predictions(ev.predictions, o.delimiter));
  out << metrics_json(ev.metrics) << '\n';
  return 0;
}

int cmd_predict(const Options& o, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(o.checkpoint);
  const Vocabulary vocab = Vocabulary::load(o.vocab, ckpt.info.casing);
  check_vocab(ckpt.info, vocab);
  const std::size_t max_len = o.max_len == 0 ? ckpt.info.max_len : o.max_len;
  if (max_len > ckpt.info.config.max_position) {
    throw std::invalid_argument("--max-len " + std::to_string(max_len) +
                                " exceeds the checkpoint's max_position");
  }
  const Corpus rows = read_unlabeled(o.data, o.delimiter);
  std::vector<std::string> ids, texts;
  for (const auto& r : rows) {
    ids.push_back(r.id);
    texts.push_back(r.text);
  }
  const auto preds = predict(ckpt.model, vocab, ids, texts, max_len);
  const fs::path path = o.out.empty() ? fs::path(o.out_dir) / "predictions.csv" : fs::path(o.out);
  write_text(path, format_predictions(preds, o.delimiter));
  out << fmt::format("{} predictions -> {}\n", preds.size(), path.string());
  return 0;
}

int cmd_sweep(const Options& o, std::ostream& out) {
  if (!o.lengths.empty() && !o.profiles.empty()) {
    throw std::invalid_argument("--lengths and --profiles are mutually exclusive");
  }
  const TrainConfig config = train_config(o);
  const fs::path dir = o.out_dir;
  const Split split = train_dev(o);
  const Vocabulary vocab = vocab_for(o, split.train, dir, out);
  const SweepReport report =
      o.profiles.empty()
          ? sweep_lengths(split.train, split.dev, vocab, config,
                          o.lengths.empty() ? kDefaultSweepLengths : o.lengths)
          : sweep_profiles(split.train, split.dev, vocab, config, o.profiles);
  const std::string table = sweep_table(report);
  write_text(dir / "sweep.txt", table);
  write_text(dir / "sweep.json", sweep_to_json(report).dump(2) + "\n");
  out << table;
  return 0;
}

void add_data(CLI::App* cmd, Options& o, bool required = true) {
  auto* opt = cmd->add_option("--data", o.data, "Corpus file (id;text;label)");
  if (required) opt->required();
  cmd->add_option("--delimiter", o.delimiter, "Field delimiter")->capture_default_str();
}

void add_training(CLI::App* cmd, Options& o) {
  cmd->add_option("--dev", o.dev, "Explicit dev corpus (skips the stratified split)");
  cmd->add_option("--dev-fraction", o.dev_fraction, "Dev share of each class")
      ->capture_default_str();
  cmd->add_option("--vocab", o.vocab, "Vocabulary file (built from the train split if absent)");
  cmd->add_option("--vocab-size", o.vocab_size, "Vocabulary size when building")
      ->capture_default_str();
  cmd->add_option("--min-freq", o.min_freq, "Minimum merge frequency when building")
      ->capture_default_str();
  cmd->add_option("--casing", o.casing, "cased | uncased")->capture_default_str();
  cmd->add_option("--max-len", o.max_len, "Truncation length in subword tokens (>= 3)")
      ->capture_default_str();
  cmd->add_option("--alpha", o.alpha, "Positive-class loss weight (default: imbalance ratio)");
  cmd->add_option("--profile", o.profile, "Encoder profile: tiny | small | medium")
      ->capture_default_str();
  cmd->add_option("--pooling", o.pooling, "cls | mean")->capture_default_str();
  cmd->add_option("--epochs", o.epochs, "Training epochs")->capture_default_str();
  cmd->add_option("--batch-size", o.batch_size, "Mini-batch size")->capture_default_str();
  cmd->add_option("--lr", o.lr, "Adam learning rate")->capture_default_str();
  cmd->add_option("--seed", o.seed, "Master seed")->capture_default_str();
  cmd->add_option("--clip-norm", o.clip_norm, "Global gradient-norm clip (default off)");
  cmd->add_option("--dropout", o.dropout, "Dropout rate (default: profile value 0.1)");
  cmd->add_option("--out-dir", o.out_dir, "Output directory")->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Causal sentence detection: vocabulary, training, evaluation, sweeps"};
  app.require_subcommand(1);

  auto* stats = app.add_subcommand("stats", "Print class counts and imbalance ratio as JSON");
  add_data(stats, o);

  auto* split = app.add_subcommand("split", "Write a stratified train/dev split");
  add_data(split, o);
  split->add_option("--dev-fraction", o.dev_fraction, "Dev share of each class")
      ->capture_default_str();
  split->add_option("--seed", o.seed, "Shuffle seed")->capture_default_str();
  split->add_option("--out-dir", o.out_dir, "Output directory")->capture_default_str();

  auto* vocab = app.add_subcommand("build-vocab", "Induce a subword vocabulary");
  add_data(vocab, o);
  vocab->add_option("--vocab", o.vocab, "Output vocabulary file (default <out-dir>/vocab.txt)");
  vocab->add_option("--vocab-size", o.vocab_size, "Maximum tokens including specials")
      ->capture_default_str();
  vocab->add_option("--min-freq", o.min_freq, "Minimum symbol/merge frequency")
      ->capture_default_str();
  vocab->add_option("--casing", o.casing, "cased | uncased")->capture_default_str();
  vocab->add_option("--heldout", o.heldout, "Corpus to report held-out coverage on");
  vocab->add_option("--out-dir", o.out_dir, "Output directory")->capture_default_str();

  auto* trn = app.add_subcommand("train", "Train encoder + head and save the best checkpoint");
  add_data(trn, o);
  add_training(trn, o);

  auto* ev = app.add_subcommand("eval", "Score a labeled corpus with a checkpoint");
  add_data(ev, o);
  ev->add_option("--checkpoint", o.checkpoint, "Checkpoint directory")->required();
  ev->add_option("--vocab", o.vocab, "Vocabulary file used for training")->required();
  ev->add_option("--max-len", o.max_len, "Truncation length (default: checkpoint's)");
  ev->add_option("--out-dir", o.out_dir, "Output directory")->capture_default_str();

  auto* pred = app.add_subcommand("predict", "Predict unlabeled rows (id;text)");
  add_data(pred, o);
  pred->add_option("--checkpoint", o.checkpoint, "Checkpoint directory")->required();
  pred->add_option("--vocab", o.vocab, "Vocabulary file used for training")->required();
  pred->add_option("--max-len", o.max_len, "Truncation length (default: checkpoint's)");
  pred->add_option("--out", o.out, "Prediction dump (default <out-dir>/predictions.csv)");
  pred->add_option("--out-dir", o.out_dir, "Output directory")->capture_default_str();

  auto* sweep = app.add_subcommand("sweep", "Sequence-length or profile sweep");
  add_data(sweep, o);
  add_training(sweep, o);
  sweep->add_option("--lengths", o.lengths, "Truncation lengths (default 64,128,256,512)")
      ->delimiter(',');
  sweep->add_option("--profiles", o.profiles, "Encoder profiles, e.g. tiny,small,medium")
      ->delimiter(',');

  // eval/predict default to the checkpoint's max_len.
  ev->preparse_callback([&o](std::size_t) { o.max_len = 0; });
  pred->preparse_callback([&o](std::size_t) { o.max_len = 0; });

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*stats) return cmd_stats(o, out);
    if (*split) return cmd_split(o, out);
    if (*vocab) return cmd_build_vocab(o, out);
    if (*trn) return cmd_train(o, out);
    if (*ev) return cmd_eval(o, out);
    if (*pred) return cmd_predict(o, out);
    if (*sweep) return cmd_sweep(o, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace causal::cli
