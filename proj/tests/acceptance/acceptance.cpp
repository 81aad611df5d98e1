// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "causal/checkpoint.hpp"
#include "causal/classifier.hpp"
#include "causal/encoder.hpp"
#include "causal/metrics.hpp"
#include "causal/trainer.hpp"
#include "support/cli_harness.hpp"
#include "support/experiments.hpp"
#include "support/gradcheck.hpp"
#include "support/metrics_oracle.hpp"
#include "support/synthetic.hpp"

namespace {

using namespace causal;
using Clock = std::chrono::steady_clock;
using json = nlohmann::json;
namespace fs = std::filesystem;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Random small encoder + head + weighted loss, checked entry by entry.
Outcome gradient_oracle() {
  const auto t0 = Clock::now();
  const Corpus corpus = testing::synthetic_corpus({.n_causal = 20, .n_noncausal = 20, .seed = 17});
  const Vocabulary vocab = build_vocab(corpus, 40, 1, Casing::Cased);
  std::mt19937_64 rng(2718);
  double worst = 0.0;
  std::string where;
  std::size_t checked = 0, max_params = 0;
  const int graphs = 24;
  for (int g = 0; g < graphs; ++g) {
    EncoderConfig c;
    c.vocab_size = vocab.size();
    c.n_layers = 1 + rng() % 2;
    c.n_heads = 1 + rng() % 2;
    c.d_model = c.n_heads * (2 + rng() % 3);
    c.d_ff = 4 + rng() % 9;
    c.max_position = 10;
    c.pooling = rng() % 2 ? Pooling::Mean : Pooling::Cls;
    c.dropout_rate = g % 2 ? 0.1 : 0.0;
    c.layer_norm_eps = 1e-5;
    const Model m = init_model(c, rng());
    // Wider initial weights than training init, so the check sees non-trivial curvature.
    for (auto& [name, t] : m.named_parameters()) {
      Tensor x = t;
      if (name.find("gamma") == std::string::npos && name.find("beta") == std::string::npos) {
        x.values() *= 10.0;
      }
    }
    const std::size_t batch_n = 2 + rng() % 3;
    const std::size_t max_len = 4 + rng() % 6;
    std::vector<EncodedSequence> batch;
    std::vector<int> labels;
    for (std::size_t i = 0; i < batch_n; ++i) {
      const auto& s = corpus[rng() % corpus.size()];
      batch.push_back(encode(vocab, s.text, max_len));
      labels.push_back(s.label == Label::Causal);
    }
    const double alpha = 0.5 + static_cast<double>(rng() % 8);
    const std::uint64_t dropout_seed = rng();
    auto loss = [&] {
      return weighted_loss(head_probs(m.head, encode_forward(m.encoder, batch, true, dropout_seed)),
                           labels, alpha);
    };
    const std::size_t n_params = m.encoder.parameter_count() + m.head.weight.size() + m.head.bias.size();
    max_params = std::max(max_params, n_params);
    const auto r = testing::grad_check(loss, m.named_parameters());
    checked += r.checked;
    if (r.max_rel_error > worst) worst = r.max_rel_error, where = fmt::format("graph {} {}", g, r.worst);
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && max_params <= 10000 && secs < 120.0,
          fmt::format("{} graphs, {} entries, max params {}, max rel err {:.2e} ({}), {:.1f}s",
                      graphs, checked, max_params, worst, where, secs)};
}

Outcome loss_contract() {
  double worst = 0.0;
  bool alpha_free_negatives = true, bce_identity = true;
  std::size_t cases = 0;
  for (int k = 1; k <= 99; ++k) {
    const double p = k / 100.0;
    for (int y : {0, 1}) {
      for (double alpha : {0.5, 1.0, 2.0, 4.0, 16.0}) {
        const double direct = -alpha * y * std::log(p) - (1 - y) * std::log(1.0 - p);
        const double scalar = weighted_loss(p, y, alpha);
        const std::vector<int> label{y};
        const double batched = weighted_loss(Tensor::from({1, 2}, {1.0 - p, p}), label, alpha).item();
        worst = std::max({worst, std::abs(scalar - direct), std::abs(batched - direct)});
        if (y == 0 && scalar != weighted_loss(p, 0, 1.0)) alpha_free_negatives = false;
        ++cases;
      }
      const double bce = y ? -std::log(p) : -std::log(1.0 - p);
      if (std::abs(weighted_loss(p, y, 1.0) - bce) > 1e-12) bce_identity = false;
    }
  }
  return {worst <= 1e-12 && alpha_free_negatives && bce_identity,
          fmt::format("{} grid points, max |diff| {:.1e}, alpha=1 is BCE: {}, alpha inert on negatives: {}",
                      cases, worst, bce_identity, alpha_free_negatives)};
}

Outcome metrics_oracle() {
  std::mt19937_64 rng(1000);
  std::size_t mismatches = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + rng() % 50;
    std::vector<int> p(n), g(n);
    for (auto& x : p) x = static_cast<int>(rng() % 2);
    for (auto& x : g) x = static_cast<int>(rng() % 2);
    if (!(evaluate_labels(p, g) == testing::brute_force_metrics(p, g))) ++mismatches;
  }
  return {mismatches == 0, fmt::format("1000 random label vectors, {} mismatches", mismatches)};
}

Outcome overfit() {
  const Corpus corpus = testing::overfit_corpus();
  const Vocabulary vocab = testing::overfit_vocab(corpus);
  const auto t0 = Clock::now();
  const TrainResult a = train(corpus, {}, vocab, testing::overfit_config());
  const double secs = seconds_since(t0);
  const TrainResult b = train(corpus, {}, vocab, testing::overfit_config());
  const double f1 = a.report.final_train.weighted.f1;
  const bool same = a.report.loss_trajectory() == b.report.loss_trajectory() &&
                    a.report.final_train == b.report.final_train;
  return {f1 == 1.0 && same && secs < 60.0,
          fmt::format("{} sentences, {} epochs: train F1 {:.4f}, rerun identical: {}, {:.1f}s",
                      corpus.size(), a.report.epochs.size(), f1, same, secs)};
}

Outcome alpha_recall() {
  const Corpus corpus = testing::imbalanced_corpus();
  std::vector<double> r1, r8;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    r1.push_back(testing::alpha_recall_run(corpus, 1.0, seed).dev_recall);
    r8.push_back(testing::alpha_recall_run(corpus, 8.0, seed).dev_recall);
  }
  const double m1 = testing::median(r1), m8 = testing::median(r8);
  return {m8 >= m1, fmt::format("median dev recall over 5 seeds: alpha=1 {:.3f}, alpha=8 {:.3f}", m1, m8)};
}

Outcome mask_invariants() {
  const Corpus corpus = testing::synthetic_corpus({.n_causal = 30, .n_noncausal = 30, .seed = 8});
  const Vocabulary vocab = build_vocab(corpus, 200, 1, Casing::Cased);
  double pad_diff = 0.0;
  for (Pooling pooling : {Pooling::Cls, Pooling::Mean}) {
    EncoderConfig c = profile_config("tiny", vocab.size(), 128);
    c.pooling = pooling;
    const auto params = init_params(c, 3);
    std::vector<EncodedSequence> s64, s128;
    for (std::size_t i = 0; i < 12; ++i) {
      s64.push_back(encode(vocab, corpus[i].text, 64));
      s128.push_back(encode(vocab, corpus[i].text, 128));
    }
    const Tensor a = encode_forward(params, s64, false, 0), b = encode_forward(params, s128, false, 0);
    pad_diff = std::max(pad_diff, (a.values() - b.values()).cwiseAbs().maxCoeff());
  }

  std::mt19937_64 rng(1);
  const std::string alphabet = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJ0123456789 .,;!?'()-  ";
  std::size_t bad = 0;
  for (int t = 0; t < 1000; ++t) {
    std::string text;
    for (std::size_t i = 0, n = rng() % 600; i < n; ++i) text += alphabet[rng() % alphabet.size()];
    const std::size_t max_len = 3 + rng() % 254;
    const auto e = encode(vocab, text, max_len);
    bool ok = e.token_ids.size() == max_len && e.attention_mask.size() == max_len &&
              e.real_length >= 2 && e.real_length <= max_len &&
              e.token_ids.front() == Vocabulary::kCls &&
              e.token_ids[e.real_length - 1] == Vocabulary::kSep;
    for (std::size_t i = 0; ok && i < max_len; ++i) {
      ok = e.attention_mask[i] == (i < e.real_length ? 1 : 0) &&
           (i + 1 == e.real_length) == (e.token_ids[i] == Vocabulary::kSep);
    }
    bad += !ok;
  }
  return {pad_diff <= 1e-9 && bad == 0,
          fmt::format("PAD 64->128 max |diff| {:.1e} (cls and mean pooling); 1000 random strings, {} violations",
                      pad_diff, bad)};
}

Outcome table_shape() {
  testing::TempDir dir("causal_accept_sweep");
  write_corpus(dir / "toy.csv", testing::synthetic_corpus({.n_causal = 10, .n_noncausal = 14, .seed = 21}));
  const auto r = testing::run_cli({"sweep", "--data", dir / "toy.csv", "--lengths", "64,128,256,512",
                                   "--epochs", "1", "--batch-size", "4", "--min-freq", "1",
                                   "--out-dir", dir / "out", "--seed", "3"});
  if (r.code != 0) return {false, "sweep exited " + std::to_string(r.code) + ": " + r.err};
  const std::string table = testing::read_file(dir.path() / "out/sweep.txt");
  const json j = json::parse(testing::read_file(dir.path() / "out/sweep.json"));
  const bool header = table.starts_with("Sequence length | F1 Score  | Precision | Recall");
  const bool columns = j["columns"] == json({"Sequence length", "F1 Score", "Precision", "Recall"});
  std::vector<double> secs;
  for (const auto& row : j["rows"]) secs.push_back(row["compute_seconds"].get<double>());
  bool monotone = secs.size() == 4;
  for (std::size_t i = 1; monotone && i < secs.size(); ++i) monotone = secs[i] > secs[i - 1];
  std::string times;
  for (double s : secs) times += fmt::format("{}{:.2f}", times.empty() ? "" : ", ", s);
  return {header && columns && monotone,
          fmt::format("{} rows, reference columns: {}, runtime (s) by length: {}", secs.size(),
                      header && columns, times)};
}

Outcome determinism() {
  testing::TempDir dir("causal_accept_det");
  write_corpus(dir / "c.csv", testing::synthetic_corpus({.n_causal = 20, .n_noncausal = 28, .seed = 4}));
  auto run = [&](const std::string& out) {
    return testing::run_cli({"train", "--data", dir / "c.csv", "--out-dir", out, "--epochs", "3",
                             "--batch-size", "8", "--max-len", "32", "--min-freq", "1", "--seed", "11"});
  };
  const auto a = run(dir / "a"), b = run(dir / "b");
  if (a.code || b.code) return {false, "train failed: " + a.err + b.err};
  auto losses = [&](const std::string& sub) {
    const json report = json::parse(testing::read_file(dir.path() / sub / "train_report.json"));
    std::vector<double> out;
    for (const auto& e : report["epochs"]) out.push_back(e["train_loss"].get<double>());
    return out;
  };
  auto same_file = [&](const std::string& rel) {
    return testing::read_file(dir.path() / "a" / rel) == testing::read_file(dir.path() / "b" / rel);
  };
  const bool loss_eq = losses("a") == losses("b") && !losses("a").empty();
  const bool ckpt_eq = same_file("checkpoint/params.bin") && same_file("checkpoint/manifest.json");
  const bool pred_eq = same_file("dev_predictions.csv");
  return {loss_eq && ckpt_eq && pred_eq,
          fmt::format("losses identical: {}, checkpoint bytes identical: {}, predictions identical: {}",
                      loss_eq, ckpt_eq, pred_eq)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"gradient oracle", gradient_oracle},
      {"loss contract", loss_contract},
      {"metrics oracle", metrics_oracle},
      {"overfit sanity", overfit},
      {"alpha-recall monotonicity", alpha_recall},
      {"mask/truncation invariants", mask_invariants},
      {"table-shape reproduction", table_shape},
      {"determinism", determinism},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s  %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
