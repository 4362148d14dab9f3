#include "slapred/learners/oaue.hpp"

#include <algorithm>

#include "snapshot_io.hpp"

namespace slapred {

void OaueConfig::validate() const {
  if (max_members < 1) throw std::invalid_argument("max_members must be >= 1");
  if (block_size < 1) throw std::invalid_argument("block_size must be >= 1");
  if (!(weight_epsilon > 0.0)) throw std::invalid_argument("weight_epsilon must be > 0");
  base_learner.validate();
}

double oaue_reference_mse(const std::array<double, 2>& class_counts) {
  const double total = class_counts[0] + class_counts[1];
  if (total <= 0.0) return 0.0;
  double mse = 0.0;
  for (double c : class_counts) {
    const double p = c / total;
    mse += p * (1.0 - p) * (1.0 - p);
  }
  return mse;
}

double oaue_weight(double mse_r, double mse_i, double epsilon) {
  return 1.0 / (mse_r + mse_i + epsilon);
}

Oaue::Oaue(OaueConfig config) : config_(config) { config_.validate(); }

void Oaue::reset() {
  members_.clear();
  block_.clear();
  block_counts_ = {};
  blocks_completed_ = 0;
}

Prediction Oaue::predict(const FeatureVector& x) const {
  if (members_.empty()) return Prediction::from_score(0.5);
  double total = 0.0;
  double violated = 0.0;
  for (const auto& m : members_) {
    violated += m.weight * m.tree.predict(x).score;
    total += m.weight;
  }
  return Prediction::from_score(violated / total);
}

void Oaue::learn(const LabeledSample& sample) {
  for (auto& m : members_) {
    const double p = m.tree.predict(sample.features).score;
    const double p_true = sample.label == SlaLabel::violated ? p : 1.0 - p;
    m.squared_error += (1.0 - p_true) * (1.0 - p_true);
    m.tree.learn(sample);
  }
  block_.push_back(sample);
  block_counts_[static_cast<std::size_t>(sample.label)] += 1.0;
  if (block_.size() >= static_cast<std::size_t>(config_.block_size)) finish_block();
}

void Oaue::finish_block() {
  const double mse_r = oaue_reference_mse(block_counts_);
  const double n = static_cast<double>(block_.size());
  for (auto& m : members_) {
    m.weight = oaue_weight(mse_r, m.squared_error / n, config_.weight_epsilon);
    m.squared_error = 0.0;
  }

  Member candidate{HoeffdingTree(config_.base_learner), 0.0, 0.0};
  for (const auto& s : block_) candidate.tree.learn(s);
  candidate.weight = 1.0 / (mse_r + config_.weight_epsilon);

  if (members_.size() < static_cast<std::size_t>(config_.max_members)) {
    members_.push_back(std::move(candidate));
  } else {
    auto weakest = std::min_element(members_.begin(), members_.end(),
                                    [](const Member& a, const Member& b) { return a.weight < b.weight; });
    // The candidate is dropped only when it is strictly the weakest of all.
    if (weakest->weight <= candidate.weight) *weakest = std::move(candidate);
  }

  block_.clear();
  block_counts_ = {};
  ++blocks_completed_;
}

nlohmann::json Oaue::to_json() const {
  nlohmann::json members = nlohmann::json::array();
  for (const auto& m : members_) {
    members.push_back(
        {{"tree", m.tree.to_json()}, {"weight", m.weight}, {"squared_error", m.squared_error}});
  }
  nlohmann::json block = nlohmann::json::array();
  for (const auto& s : block_) block.push_back(sample_to_json(s));
  return {{"kind", "oaue"},
          {"version", kSnapshotVersion},
          {"config",
           {{"max_members", config_.max_members},
            {"block_size", config_.block_size},
            {"weight_epsilon", config_.weight_epsilon},
            {"base_learner", hoeffding_config_to_json(config_.base_learner)}}},
          {"members", members},
          {"block", block},
          {"block_counts", block_counts_},
          {"blocks_completed", blocks_completed_}};
}

Oaue Oaue::from_json(const nlohmann::json& j) {
  expect_kind(j, "oaue");
  const auto& jc = j.at("config");
  OaueConfig c;
  c.max_members = jc.at("max_members").get<int>();
  c.block_size = jc.at("block_size").get<int>();
  c.weight_epsilon = jc.at("weight_epsilon").get<double>();
  c.base_learner = hoeffding_config_from_json(jc.at("base_learner"));

  Oaue ens(c);
  for (const auto& jm : j.at("members")) {
    ens.members_.push_back({HoeffdingTree::from_json(jm.at("tree")), jm.at("weight").get<double>(),
                            jm.at("squared_error").get<double>()});
  }
  for (const auto& js : j.at("block")) ens.block_.push_back(sample_from_json(js));
  ens.block_counts_ = j.at("block_counts").get<std::array<double, 2>>();
  ens.blocks_completed_ = j.at("blocks_completed").get<std::size_t>();
  return ens;
}

std::string Oaue::serialize() const { return to_json().dump(); }

}  // namespace slapred
