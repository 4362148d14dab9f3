#include "slapred/learners/sgd_logistic.hpp"

#include <cmath>
#include <vector>

#include "snapshot_io.hpp"

namespace slapred {

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

void SgdLogisticConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  if (iterations_per_chunk < 1) throw std::invalid_argument("iterations_per_chunk must be >= 1");
}

SgdLogistic::SgdLogistic(SgdLogisticConfig config) : config_(config) { config_.validate(); }

std::array<double, kNumFeatures> SgdLogistic::transform(const FeatureVector& x) const {
  std::array<double, kNumFeatures> z = x.values;
  if (!config_.standardize) return z;
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    const double sd = scale_[i].stddev();
    z[i] = (x[i] - scale_[i].mean()) / (sd > 0.0 ? sd : 1.0);
  }
  return z;
}

double SgdLogistic::logit(const std::array<double, kNumFeatures>& z) const {
  double t = bias_;
  for (std::size_t i = 0; i < kNumFeatures; ++i) t += weights_[i] * z[i];
  return t;
}

Prediction SgdLogistic::predict(const FeatureVector& x) const {
  return Prediction::from_score(sigmoid(logit(transform(x))));
}

void SgdLogistic::learn(const LabeledSample& sample) {
  learn_chunk(std::span<const LabeledSample>(&sample, 1));
}

void SgdLogistic::learn_chunk(std::span<const LabeledSample> chunk) {
  if (chunk.empty()) throw std::invalid_argument("empty chunk");
  const auto saved_weights = weights_;
  const double saved_bias = bias_;
  const auto saved_scale = scale_;

  if (config_.standardize) {
    for (const auto& s : chunk) {
      for (std::size_t i = 0; i < kNumFeatures; ++i) scale_[i].add(s.features[i]);
    }
  }

  std::vector<std::array<double, kNumFeatures>> inputs;
  std::vector<double> targets;
  inputs.reserve(chunk.size());
  targets.reserve(chunk.size());
  for (const auto& s : chunk) {
    inputs.push_back(transform(s.features));
    targets.push_back(s.label == SlaLabel::violated ? 1.0 : 0.0);
  }

  const double step = config_.learning_rate / static_cast<double>(chunk.size());
  for (int it = 0; it < config_.iterations_per_chunk; ++it) {
    std::array<double, kNumFeatures> grad{};
    double grad_bias = 0.0;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      const double residual = targets[k] - sigmoid(logit(inputs[k]));
      grad_bias += residual;
      for (std::size_t i = 0; i < kNumFeatures; ++i) grad[i] += residual * inputs[k][i];
    }
    bool finite = std::isfinite(grad_bias);
    bias_ += step * grad_bias;
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
      weights_[i] += step * grad[i];
      finite = finite && std::isfinite(weights_[i]);
    }
    if (!finite || !std::isfinite(bias_)) {
      weights_ = saved_weights;
      bias_ = saved_bias;
      scale_ = saved_scale;
      throw DivergenceError();
    }
  }
}

void SgdLogistic::reset() {
  weights_ = {};
  bias_ = 0.0;
  scale_ = {};
}

nlohmann::json SgdLogistic::to_json() const {
  nlohmann::json scale = nlohmann::json::array();
  for (const auto& g : scale_) scale.push_back(g.to_json());
  return {{"kind", "sgd_logistic"},
          {"version", kSnapshotVersion},
          {"config",
           {{"learning_rate", config_.learning_rate},
            {"iterations_per_chunk", config_.iterations_per_chunk},
            {"standardize", config_.standardize}}},
          {"weights", weights_},
          {"bias", bias_},
          {"scale", scale}};
}

SgdLogistic SgdLogistic::from_json(const nlohmann::json& j) {
  expect_kind(j, "sgd_logistic");
  SgdLogisticConfig c;
  const auto& jc = j.at("config");
  c.learning_rate = jc.at("learning_rate").get<double>();
  c.iterations_per_chunk = jc.at("iterations_per_chunk").get<int>();
  c.standardize = jc.at("standardize").get<bool>();
  SgdLogistic m(c);
  m.weights_ = j.at("weights").get<std::array<double, kNumFeatures>>();
  m.bias_ = j.at("bias").get<double>();
  const auto& scale = j.at("scale");
  for (std::size_t i = 0; i < kNumFeatures; ++i) m.scale_[i] = GaussianEstimator::from_json(scale.at(i));
  return m;
}

std::string SgdLogistic::serialize() const { return to_json().dump(); }

}  // namespace slapred
