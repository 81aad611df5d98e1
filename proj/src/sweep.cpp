#include "causal/sweep.hpp"

#include <chrono>

#include <fmt/format.h>

namespace causal {

namespace {

SweepRow run_one(const std::string& name, const Corpus& train_split, const Corpus& dev,
                 const Vocabulary& vocab, const TrainConfig& config) {
  try {
    const auto start = std::chrono::steady_clock::now();
    const auto result = train(train_split, dev, vocab, config);
    SweepRow row;
    row.configuration = name;
    row.metrics = result.report.final_dev ? *result.report.final_dev : result.report.final_train;
    row.compute_seconds = result.report.compute_seconds();
    row.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return row;
  } catch (const std::exception& e) {
    throw SweepError("sweep configuration '" + name + "' failed: " + e.what());
  }
}

}  // namespace

SweepReport sweep_lengths(const Corpus& train_split, const Corpus& dev, const Vocabulary& vocab,
                          const TrainConfig& base, const std::vector<std::size_t>& lengths) {
  if (lengths.empty()) throw SweepError("sweep: no lengths requested");
  for (auto len : lengths) {
    if (len < 3) throw SweepError("sweep configuration '" + std::to_string(len) +
                                  "' failed: length must be >= 3");
  }
  SweepReport report{SweepKind::Length, {}};
  for (auto len : lengths) {
    TrainConfig config = base;
    config.max_len = len;
    report.rows.push_back(run_one(std::to_string(len), train_split, dev, vocab, config));
  }
  return report;
}

SweepReport sweep_profiles(const Corpus& train_split, const Corpus& dev, const Vocabulary& vocab,
                           const TrainConfig& base, const std::vector<std::string>& profiles) {
  if (profiles.empty()) throw SweepError("sweep: no profiles requested");
  SweepReport report{SweepKind::Profile, {}};
  for (const auto& name : profiles) {
    TrainConfig config = base;
    config.profile = name;
    config.encoder.reset();
    report.rows.push_back(run_one(name, train_split, dev, vocab, config));
  }
  return report;
}

std::string sweep_table(const SweepReport& report) {
  const char* first = report.kind == SweepKind::Length ? "Sequence length" : "Model";
  std::string out = fmt::format("{:<16}| {:<10}| {:<10}| {:<10}\n", first, "F1 Score",
                                "Precision", "Recall");
  out += std::string(out.size() - 1, '-') + "\n";
  for (const auto& r : report.rows) {
    const auto& w = r.metrics.weighted;
    out += fmt::format("{:<16}| {:<10.6f}| {:<10.6f}| {:<10.6f}\n", r.configuration, w.f1,
                       w.precision, w.recall);
  }
  out += "\nWall-clock, forward+backward (s)\n";
  for (const auto& r : report.rows) {
    out += fmt::format("{:<16}| {:.3f}\n", r.configuration, r.compute_seconds);
  }
  return out;
}

nlohmann::ordered_json sweep_to_json(const SweepReport& report) {
  nlohmann::ordered_json j;
  const bool by_length = report.kind == SweepKind::Length;
  j["kind"] = by_length ? "sequence_length" : "profile";
  j["columns"] = {by_length ? "Sequence length" : "Model", "F1 Score", "Precision", "Recall"};
  auto rows = nlohmann::ordered_json::array();
  for (const auto& r : report.rows) {
    nlohmann::ordered_json row;
    if (by_length) {
      row["sequence_length"] = std::stoul(r.configuration);
    } else {
      row["profile"] = r.configuration;
    }
    row["f1"] = r.metrics.weighted.f1;
    row["precision"] = r.metrics.weighted.precision;
    row["recall"] = r.metrics.weighted.recall;
    row["metrics"] = metrics_to_json(r.metrics);
    row["compute_seconds"] = r.compute_seconds;
    row["wall_seconds"] = r.wall_seconds;
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  return j;
}

}  // namespace causal
