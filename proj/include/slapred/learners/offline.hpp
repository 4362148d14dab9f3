#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "slapred/learners/classifier.hpp"

namespace slapred {

enum class OfflineMethod { logistic, cart, random_forest };

std::string_view to_string(OfflineMethod m);
OfflineMethod offline_method_from_string(std::string_view name);

struct BatchLogisticConfig {
  int max_iterations = 10000;
  // stop once |dLL| / |LL| falls below this
  double relative_tolerance = 1e-6;
  double initial_step = 1.0;
};

struct CartConfig {
  // nodes with fewer samples than this become leaves
  int min_split = 5;
  // features examined per split; 0 means all of them
  int features_per_split = 0;
};

struct RandomForestConfig {
  int trees = 100;
  // ceil(sqrt(21))
  int features_per_split = 5;
  bool bootstrap = true;
  int min_split = 5;
};

struct OfflineConfig {
  BatchLogisticConfig logistic;
  CartConfig cart;
  RandomForestConfig forest;
};

// Logistic regression fitted by full-batch gradient ascent on z-scored inputs,
// halving the step whenever the log-likelihood would decrease.
class BatchLogistic final : public OfflineModel {
 public:
  static BatchLogistic train(std::span<const LabeledSample> data, const BatchLogisticConfig& config = {});

  Prediction predict(const FeatureVector& x) const override;
  std::string_view name() const override { return "logistic"; }
  std::string serialize() const override;

  nlohmann::json to_json() const;
  static BatchLogistic from_json(const nlohmann::json& j);

  int iterations() const { return iterations_; }
  double log_likelihood() const { return log_likelihood_; }

 private:
  std::array<double, kNumFeatures> mean_{};
  std::array<double, kNumFeatures> scale_{};
  std::array<double, kNumFeatures> weights_{};
  double bias_ = 0.0;
  int iterations_ = 0;
  double log_likelihood_ = 0.0;
};

// Binary classification tree grown on Gini impurity without pruning.
class CartTree final : public OfflineModel {
 public:
  struct Node {
    int feature = -1;  // -1 for leaves
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double score = 0.0;  // fraction of violated training samples
    std::uint32_t samples = 0;
  };

  /// `rng_seed` drives the per-split feature subsampling when
  /// features_per_split is below the feature count.
  static CartTree train(std::span<const LabeledSample> data, const CartConfig& config = {},
                        std::uint64_t rng_seed = 0);

  Prediction predict(const FeatureVector& x) const override;
  std::string_view name() const override { return "cart"; }
  std::string serialize() const override;

  nlohmann::json to_json() const;
  static CartTree from_json(const nlohmann::json& j);

  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t num_leaves() const;

 private:
  friend class RandomForest;
  std::vector<Node> nodes_;
};

class RandomForest final : public OfflineModel {
 public:
  static RandomForest train(std::span<const LabeledSample> data, const RandomForestConfig& config,
                            std::uint64_t seed);

  /// Score is the fraction of trees voting `violated`.
  Prediction predict(const FeatureVector& x) const override;
  std::string_view name() const override { return "random_forest"; }
  std::string serialize() const override;

  nlohmann::json to_json() const;
  static RandomForest from_json(const nlohmann::json& j);

  const std::vector<CartTree>& trees() const { return trees_; }

 private:
  std::vector<CartTree> trees_;
};

/// Throws DegenerateTrainingSet unless both classes are present.
void require_both_classes(std::span<const LabeledSample> data);

std::unique_ptr<OfflineModel> train_offline(OfflineMethod method, std::span<const LabeledSample> data,
                                            const OfflineConfig& config = {}, std::uint64_t seed = 0);

}  // namespace slapred
