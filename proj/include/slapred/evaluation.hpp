#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "slapred/core.hpp"
#include "slapred/learners/classifier.hpp"
#include "slapred/learners/offline.hpp"

namespace slapred {

struct PrequentialConfig {
  std::size_t chunk_size = 10;
  // samples used for initial training only, never scored
  std::size_t bootstrap_size = 500;
  std::vector<std::size_t> sliding_windows{5000, 1000};

  void validate() const;
};

/// Running accuracy over all bits so far; element n-1 covers the first n bits.
std::vector<double> cumulative_accuracy(std::span<const std::uint8_t> correct);

/// Element n-1 is the mean of the last min(n, window) bits.
std::vector<double> sliding_accuracy(std::span<const std::uint8_t> correct, std::size_t window);

struct AccuracySeries {
  std::vector<std::uint8_t> correct;
  std::vector<std::size_t> windows;
  std::vector<double> cumulative;
  std::vector<std::vector<double>> sliding;  // parallel to `windows`

  static AccuracySeries from_bits(std::vector<std::uint8_t> correct, std::vector<std::size_t> windows);

  std::size_t size() const { return correct.size(); }
  const std::vector<double>& window(std::size_t w) const;
};

/// CSV with header `index,cumulative,win_<w>...`; one row per `stride` scored
/// samples (index is 1-based) and always the final row.
void write_series_csv(const AccuracySeries& series, std::ostream& out, std::size_t stride = 1);

struct EvaluationResult {
  ConfusionMatrix confusion;
  MetricsReport metrics;
  AccuracySeries series;  // empty for holdout runs
};

class InsufficientBootstrap : public std::invalid_argument {
 public:
  InsufficientBootstrap() : std::invalid_argument("insufficient bootstrap") {}
};

/// Chunked test-then-train. The first bootstrap_size samples are learned as a
/// single chunk and never scored; every later chunk is fully predicted before
/// any of its samples is learned. A trailing partial chunk is scored and learned.
EvaluationResult prequential_evaluate(OnlineClassifier& classifier, std::span<const LabeledSample> stream,
                                      const PrequentialConfig& config = {});

/// Scores a frozen model on every sample of `stream`, in order.
EvaluationResult stream_evaluate(const OfflineModel& model, std::span<const LabeledSample> stream,
                                 const std::vector<std::size_t>& windows = {5000, 1000});

using OfflineTrainer = std::function<std::unique_ptr<OfflineModel>(std::span<const LabeledSample>)>;

/// Uniform random split (by `seed`) into training and test partitions.
struct HoldoutSplit {
  std::vector<LabeledSample> train;
  std::vector<LabeledSample> test;
};
HoldoutSplit holdout_split(std::span<const LabeledSample> data, double train_fraction, std::uint64_t seed);

EvaluationResult holdout_evaluate(const OfflineTrainer& trainer, std::span<const LabeledSample> data,
                                  double train_fraction = 0.7, std::uint64_t seed = 0);
EvaluationResult holdout_evaluate(OfflineMethod method, std::span<const LabeledSample> data,
                                  double train_fraction = 0.7, std::uint64_t seed = 0,
                                  const OfflineConfig& config = {});

/// Trains on all of `train`, scores all of `test` as a stream.
EvaluationResult cross_trace_evaluate(OfflineMethod method, std::span<const LabeledSample> train,
                                      std::span<const LabeledSample> test, std::uint64_t seed = 0,
                                      const OfflineConfig& config = {},
                                      const std::vector<std::size_t>& windows = {5000, 1000});

}  // namespace slapred
