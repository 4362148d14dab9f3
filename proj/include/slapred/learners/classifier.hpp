#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "slapred/core.hpp"

namespace slapred {

// Incrementally trained model. learn() calls must be serialized by the caller;
// predict() never changes model state.
class OnlineClassifier {
 public:
  virtual ~OnlineClassifier() = default;

  virtual Prediction predict(const FeatureVector& x) const = 0;
  virtual void learn(const LabeledSample& sample) = 0;

  // Tree learners consume a chunk sample by sample; chunk-native learners override.
  virtual void learn_chunk(std::span<const LabeledSample> chunk) {
    for (const auto& s : chunk) learn(s);
  }

  virtual void reset() = 0;
  virtual std::string_view name() const = 0;

  /// Versioned JSON snapshot; see load_online_classifier().
  virtual std::string serialize() const = 0;
};

// Frozen model produced by batch training.
class OfflineModel {
 public:
  virtual ~OfflineModel() = default;

  virtual Prediction predict(const FeatureVector& x) const = 0;
  virtual std::string_view name() const = 0;
  virtual std::string serialize() const = 0;
};

class DegenerateTrainingSet : public std::invalid_argument {
 public:
  DegenerateTrainingSet() : std::invalid_argument("degenerate training set") {}
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError() : std::runtime_error("divergence") {}
};

class SnapshotError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kSnapshotVersion = 1;

std::unique_ptr<OnlineClassifier> load_online_classifier(std::string_view snapshot);
std::unique_ptr<OfflineModel> load_offline_model(std::string_view snapshot);

}  // namespace slapred
