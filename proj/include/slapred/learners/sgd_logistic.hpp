#pragma once

#include <array>

#include "json.hpp"
#include "slapred/learners/classifier.hpp"
#include "slapred/learners/gaussian.hpp"

namespace slapred {

struct SgdLogisticConfig {
  double learning_rate = 0.01;
  int iterations_per_chunk = 100;
  // z-score inputs with running per-feature mean and variance
  bool standardize = true;

  void validate() const;
};

// Logistic regression trained by repeated gradient ascent on each chunk's
// mean log-likelihood.
class SgdLogistic final : public OnlineClassifier {
 public:
  explicit SgdLogistic(SgdLogisticConfig config = {});

  Prediction predict(const FeatureVector& x) const override;
  void learn(const LabeledSample& sample) override;
  /// Throws DivergenceError and restores the pre-chunk state when an update
  /// produces a non-finite value.
  void learn_chunk(std::span<const LabeledSample> chunk) override;
  void reset() override;
  std::string_view name() const override { return "sgd_logistic"; }
  std::string serialize() const override;

  nlohmann::json to_json() const;
  static SgdLogistic from_json(const nlohmann::json& j);

  const SgdLogisticConfig& config() const { return config_; }
  const std::array<double, kNumFeatures>& weights() const { return weights_; }
  double bias() const { return bias_; }

 private:
  std::array<double, kNumFeatures> transform(const FeatureVector& x) const;
  double logit(const std::array<double, kNumFeatures>& z) const;

  SgdLogisticConfig config_;
  std::array<double, kNumFeatures> weights_{};
  double bias_ = 0.0;
  std::array<GaussianEstimator, kNumFeatures> scale_{};
};

double sigmoid(double t);

}  // namespace slapred
