#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "slapred/learners/classifier.hpp"
#include "slapred/learners/gaussian.hpp"

namespace slapred {

enum class LeafPredictor { majority, naive_bayes, adaptive_nb };

std::string_view to_string(LeafPredictor p);
LeafPredictor leaf_predictor_from_string(std::string_view name);

struct HoeffdingTreeConfig {
  int grace_period = 100;
  double split_confidence = 0.01;
  double tie_threshold = 0.05;
  LeafPredictor leaf_predictor = LeafPredictor::adaptive_nb;
  // candidate thresholds per numeric attribute
  int numeric_bins = 10;

  void validate() const;
};

/// epsilon = sqrt(range^2 * ln(1/confidence) / (2n)).
double hoeffding_bound(double range, double confidence, double n);

// Sufficient statistics kept at a leaf: class counts, per-class Gaussian
// summaries of every attribute, and running training-accuracy counters of the
// majority-class and naive Bayes predictors.
class LeafModel {
 public:
  LeafModel() = default;
  explicit LeafModel(std::array<double, 2> prior) : prior_(prior) {}

  /// Scores both leaf predictors on (x, y) before absorbing it.
  void learn(const FeatureVector& x, SlaLabel y);

  Prediction predict(const FeatureVector& x, LeafPredictor predictor) const;
  Prediction majority_prediction() const;
  Prediction naive_bayes_prediction(const FeatureVector& x) const;

  double total_weight() const { return counts_[0] + counts_[1]; }
  double count(SlaLabel c) const { return counts_[static_cast<std::size_t>(c)]; }
  // Normalized class counts, or the inherited prior for an empty leaf.
  std::array<double, 2> class_distribution() const;

  double majority_correct() const { return mc_correct_; }
  double naive_bayes_correct() const { return nb_correct_; }

  const GaussianEstimator& attribute(std::size_t feature, SlaLabel c) const {
    return attributes_[feature][static_cast<std::size_t>(c)];
  }

  double weight_at_last_attempt = 0.0;

  nlohmann::json to_json() const;
  static LeafModel from_json(const nlohmann::json& j);

  friend bool operator==(const LeafModel&, const LeafModel&) = default;

 private:
  std::array<double, 2> counts_{};
  std::array<double, 2> prior_{0.5, 0.5};
  std::array<std::array<GaussianEstimator, 2>, kNumFeatures> attributes_{};
  double mc_correct_ = 0.0;
  double nb_correct_ = 0.0;
};

struct SplitDecision {
  bool split = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double best_gain = 0.0;
  double second_gain = 0.0;
  double epsilon = 0.0;
};

struct AttributeSplit {
  double gain = 0.0;
  double threshold = 0.0;
  bool valid = false;
};

/// Best information-gain threshold for one attribute among `bins` equally
/// spaced points strictly inside the observed range.
AttributeSplit best_attribute_split(const LeafModel& leaf, std::size_t feature, int bins);

/// Split when the gain gap between the two best attributes exceeds the
/// Hoeffding bound, or when the bound itself falls below the tie threshold.
SplitDecision hoeffding_try_split(const LeafModel& leaf, const HoeffdingTreeConfig& config);

class HoeffdingTree final : public OnlineClassifier {
 public:
  explicit HoeffdingTree(HoeffdingTreeConfig config = {});

  Prediction predict(const FeatureVector& x) const override;
  void learn(const LabeledSample& sample) override;
  void reset() override;
  std::string_view name() const override { return "hoeffding_tree"; }
  std::string serialize() const override;

  nlohmann::json to_json() const;
  static HoeffdingTree from_json(const nlohmann::json& j);

  const HoeffdingTreeConfig& config() const { return config_; }
  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_leaves() const;
  std::size_t depth() const;
  std::optional<std::size_t> root_split_feature() const;

 private:
  struct Node {
    std::size_t feature = 0;
    double threshold = 0.0;
    std::size_t left = 0;
    std::size_t right = 0;
    std::optional<LeafModel> leaf;  // engaged for leaves only
  };

  std::size_t find_leaf(const FeatureVector& x) const;

  HoeffdingTreeConfig config_;
  std::vector<Node> nodes_;
};

}  // namespace slapred
