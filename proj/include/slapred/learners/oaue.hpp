#pragma once

#include <array>
#include <vector>

#include "json.hpp"
#include "slapred/learners/hoeffding_tree.hpp"

namespace slapred {

struct OaueConfig {
  int max_members = 100;
  // samples per block; one candidate member is built at the end of each block
  int block_size = 500;
  HoeffdingTreeConfig base_learner;
  double weight_epsilon = 1e-9;

  void validate() const;
};

/// Reference error of a classifier that predicts at random from the block's
/// class distribution: sum_c p(c) * (1 - p(c))^2.
double oaue_reference_mse(const std::array<double, 2>& class_counts);

/// 1 / (mse_r + mse_i + epsilon).
double oaue_weight(double mse_r, double mse_i, double epsilon = 1e-9);

// Online Accuracy Updated Ensemble of Hoeffding trees. Every member learns every
// sample; at each block boundary members are reweighted by their error on the
// block and a candidate trained on the block joins, displacing the weakest
// member once the ensemble is full.
class Oaue final : public OnlineClassifier {
 public:
  struct Member {
    HoeffdingTree tree;
    double weight = 0.0;
    double squared_error = 0.0;  // accumulated over the current block
  };

  explicit Oaue(OaueConfig config = {});

  Prediction predict(const FeatureVector& x) const override;
  void learn(const LabeledSample& sample) override;
  void reset() override;
  std::string_view name() const override { return "oaue"; }
  std::string serialize() const override;

  nlohmann::json to_json() const;
  static Oaue from_json(const nlohmann::json& j);

  const OaueConfig& config() const { return config_; }
  const std::vector<Member>& members() const { return members_; }
  std::size_t blocks_completed() const { return blocks_completed_; }

 private:
  void finish_block();

  OaueConfig config_;
  std::vector<Member> members_;
  std::vector<LabeledSample> block_;
  std::array<double, 2> block_counts_{};
  std::size_t blocks_completed_ = 0;
};

}  // namespace slapred
