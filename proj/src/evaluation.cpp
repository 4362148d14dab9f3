#include "slapred/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

namespace slapred {

void PrequentialConfig::validate() const {
  if (chunk_size < 1) throw std::invalid_argument("chunk_size must be >= 1");
  for (auto w : sliding_windows) {
    if (w < 1) throw std::invalid_argument("sliding windows must be >= 1");
  }
}

std::vector<double> cumulative_accuracy(std::span<const std::uint8_t> correct) {
  std::vector<double> out;
  out.reserve(correct.size());
  std::size_t hits = 0;
  for (std::size_t n = 0; n < correct.size(); ++n) {
    hits += correct[n] ? 1 : 0;
    out.push_back(static_cast<double>(hits) / static_cast<double>(n + 1));
  }
  return out;
}

std::vector<double> sliding_accuracy(std::span<const std::uint8_t> correct, std::size_t window) {
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  std::vector<double> out;
  out.reserve(correct.size());
  std::size_t hits = 0;
  for (std::size_t n = 0; n < correct.size(); ++n) {
    hits += correct[n] ? 1 : 0;
    if (n >= window) hits -= correct[n - window] ? 1 : 0;
    const std::size_t len = std::min(n + 1, window);
    out.push_back(static_cast<double>(hits) / static_cast<double>(len));
  }
  return out;
}

AccuracySeries AccuracySeries::from_bits(std::vector<std::uint8_t> correct, std::vector<std::size_t> windows) {
  AccuracySeries s;
  s.correct = std::move(correct);
  s.windows = std::move(windows);
  s.cumulative = cumulative_accuracy(s.correct);
  for (auto w : s.windows) s.sliding.push_back(sliding_accuracy(s.correct, w));
  return s;
}

const std::vector<double>& AccuracySeries::window(std::size_t w) const {
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (windows[i] == w) return sliding[i];
  }
  throw std::out_of_range("no sliding window of length " + std::to_string(w));
}

void write_series_csv(const AccuracySeries& series, std::ostream& out, std::size_t stride) {
  if (stride < 1) stride = 1;
  out << "index,cumulative";
  for (auto w : series.windows) out << ",win_" << w;
  out << '\n';
  char buf[32];
  const auto fmt = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
  };
  const std::size_t n = series.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t index = i + 1;
    if (index % stride != 0 && index != n) continue;
    out << index << ',' << fmt(series.cumulative[i]);
    for (const auto& s : series.sliding) out << ',' << fmt(s[i]);
    out << '\n';
  }
}

EvaluationResult prequential_evaluate(OnlineClassifier& classifier, std::span<const LabeledSample> stream,
                                      const PrequentialConfig& config) {
  config.validate();
  if (stream.size() <= config.bootstrap_size) throw InsufficientBootstrap();

  if (config.bootstrap_size > 0) classifier.learn_chunk(stream.first(config.bootstrap_size));

  EvaluationResult result;
  std::vector<std::uint8_t> bits;
  bits.reserve(stream.size() - config.bootstrap_size);
  for (std::size_t begin = config.bootstrap_size; begin < stream.size(); begin += config.chunk_size) {
    const auto chunk = stream.subspan(begin, std::min(config.chunk_size, stream.size() - begin));
    for (const auto& s : chunk) {
      const SlaLabel predicted = classifier.predict(s.features).label;
      result.confusion.add(s.label, predicted);
      bits.push_back(predicted == s.label ? 1 : 0);
    }
    classifier.learn_chunk(chunk);
  }
  result.metrics = compute_metrics(result.confusion);
  result.series = AccuracySeries::from_bits(std::move(bits), config.sliding_windows);
  return result;
}

EvaluationResult stream_evaluate(const OfflineModel& model, std::span<const LabeledSample> stream,
                                 const std::vector<std::size_t>& windows) {
  EvaluationResult result;
  std::vector<std::uint8_t> bits;
  bits.reserve(stream.size());
  for (const auto& s : stream) {
    const SlaLabel predicted = model.predict(s.features).label;
    result.confusion.add(s.label, predicted);
    bits.push_back(predicted == s.label ? 1 : 0);
  }
  result.metrics = compute_metrics(result.confusion);
  result.series = AccuracySeries::from_bits(std::move(bits), windows);
  return result;
}

HoldoutSplit holdout_split(std::span<const LabeledSample> data, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("train fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(data.size())));
  HoldoutSplit split;
  split.train.reserve(n_train);
  split.test.reserve(data.size() - n_train);
  for (std::size_t k = 0; k < order.size(); ++k) {
    (k < n_train ? split.train : split.test).push_back(data[order[k]]);
  }
  return split;
}

EvaluationResult holdout_evaluate(const OfflineTrainer& trainer, std::span<const LabeledSample> data,
                                  double train_fraction, std::uint64_t seed) {
  const HoldoutSplit split = holdout_split(data, train_fraction, seed);
  if (split.test.empty()) throw EmptyEvaluation();
  const auto model = trainer(split.train);
  EvaluationResult result;
  for (const auto& s : split.test) result.confusion.add(s.label, model->predict(s.features).label);
  result.metrics = compute_metrics(result.confusion);
  return result;
}

EvaluationResult holdout_evaluate(OfflineMethod method, std::span<const LabeledSample> data,
                                  double train_fraction, std::uint64_t seed, const OfflineConfig& config) {
  const OfflineTrainer trainer = [&](std::span<const LabeledSample> train) {
    return train_offline(method, train, config, seed);
  };
  return holdout_evaluate(trainer, data, train_fraction, seed);
}

EvaluationResult cross_trace_evaluate(OfflineMethod method, std::span<const LabeledSample> train,
                                      std::span<const LabeledSample> test, std::uint64_t seed,
                                      const OfflineConfig& config, const std::vector<std::size_t>& windows) {
  const auto model = train_offline(method, train, config, seed);
  return stream_evaluate(*model, test, windows);
}

}  // namespace slapred
