#include "snapshot_io.hpp"

#include "slapred/learners/classifier.hpp"
#include "slapred/learners/oaue.hpp"
#include "slapred/learners/offline.hpp"
#include "slapred/learners/sgd_logistic.hpp"

namespace slapred {

nlohmann::json sample_to_json(const LabeledSample& s) {
  return {s.timestamp, s.features.values, static_cast<int>(s.label)};
}

LabeledSample sample_from_json(const nlohmann::json& j) {
  LabeledSample s;
  s.timestamp = j.at(0).get<double>();
  s.features.values = j.at(1).get<std::array<double, kNumFeatures>>();
  s.label = j.at(2).get<int>() == 1 ? SlaLabel::violated : SlaLabel::conforming;
  return s;
}

nlohmann::json hoeffding_config_to_json(const HoeffdingTreeConfig& c) {
  return {{"grace_period", c.grace_period},
          {"split_confidence", c.split_confidence},
          {"tie_threshold", c.tie_threshold},
          {"leaf_predictor", to_string(c.leaf_predictor)},
          {"numeric_bins", c.numeric_bins}};
}

HoeffdingTreeConfig hoeffding_config_from_json(const nlohmann::json& j) {
  HoeffdingTreeConfig c;
  c.grace_period = j.at("grace_period").get<int>();
  c.split_confidence = j.at("split_confidence").get<double>();
  c.tie_threshold = j.at("tie_threshold").get<double>();
  c.leaf_predictor = leaf_predictor_from_string(j.at("leaf_predictor").get<std::string>());
  c.numeric_bins = j.at("numeric_bins").get<int>();
  return c;
}

nlohmann::json parse_snapshot(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SnapshotError(std::string("malformed snapshot: ") + e.what());
  }
  if (!j.is_object() || !j.contains("kind") || !j.contains("version")) {
    throw SnapshotError("snapshot lacks kind/version tags");
  }
  if (j.at("version").get<int>() != kSnapshotVersion) {
    throw SnapshotError("unsupported snapshot version " + j.at("version").dump());
  }
  return j;
}

void expect_kind(const nlohmann::json& j, std::string_view kind) {
  if (j.at("kind").get<std::string>() != kind) {
    throw SnapshotError("expected snapshot kind " + std::string(kind) + ", got " +
                        j.at("kind").get<std::string>());
  }
}

std::unique_ptr<OnlineClassifier> load_online_classifier(std::string_view snapshot) {
  const auto j = parse_snapshot(snapshot);
  const auto kind = j.at("kind").get<std::string>();
  try {
    if (kind == "sgd_logistic") return std::make_unique<SgdLogistic>(SgdLogistic::from_json(j));
    if (kind == "hoeffding_tree") return std::make_unique<HoeffdingTree>(HoeffdingTree::from_json(j));
    if (kind == "oaue") return std::make_unique<Oaue>(Oaue::from_json(j));
  } catch (const nlohmann::json::exception& e) {
    throw SnapshotError("bad " + kind + " snapshot: " + e.what());
  }
  throw SnapshotError("not an online classifier snapshot: " + kind);
}

std::unique_ptr<OfflineModel> load_offline_model(std::string_view snapshot) {
  const auto j = parse_snapshot(snapshot);
  const auto kind = j.at("kind").get<std::string>();
  try {
    if (kind == "logistic") return std::make_unique<BatchLogistic>(BatchLogistic::from_json(j));
    if (kind == "cart") return std::make_unique<CartTree>(CartTree::from_json(j));
    if (kind == "random_forest") return std::make_unique<RandomForest>(RandomForest::from_json(j));
  } catch (const nlohmann::json::exception& e) {
    throw SnapshotError("bad " + kind + " snapshot: " + e.what());
  }
  throw SnapshotError("not an offline model snapshot: " + kind);
}

}  // namespace slapred
