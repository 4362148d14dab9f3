#include "slapred/learners/hoeffding_tree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "snapshot_io.hpp"

namespace slapred {

namespace {

constexpr std::size_t kConforming = static_cast<std::size_t>(SlaLabel::conforming);
constexpr std::size_t kViolated = static_cast<std::size_t>(SlaLabel::violated);

// Each branch of a candidate split must carry at least this fraction of the leaf weight.
constexpr double kMinBranchFraction = 0.01;

double entropy(double a, double b) {
  const double total = a + b;
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (double w : {a, b}) {
    if (w > 0.0) {
      const double p = w / total;
      h -= p * std::log2(p);
    }
  }
  return h;
}

}  // namespace

std::string_view to_string(LeafPredictor p) {
  switch (p) {
    case LeafPredictor::majority:
      return "majority";
    case LeafPredictor::naive_bayes:
      return "naive_bayes";
    case LeafPredictor::adaptive_nb:
      return "adaptive_nb";
  }
  return "adaptive_nb";
}

LeafPredictor leaf_predictor_from_string(std::string_view name) {
  if (name == "majority") return LeafPredictor::majority;
  if (name == "naive_bayes") return LeafPredictor::naive_bayes;
  if (name == "adaptive_nb") return LeafPredictor::adaptive_nb;
  throw std::invalid_argument("unknown leaf predictor: " + std::string(name));
}

void HoeffdingTreeConfig::validate() const {
  if (grace_period < 1) throw std::invalid_argument("grace_period must be >= 1");
  if (!(split_confidence > 0.0 && split_confidence < 1.0)) {
    throw std::invalid_argument("split_confidence must lie in (0, 1)");
  }
  if (!(tie_threshold >= 0.0)) throw std::invalid_argument("tie_threshold must be >= 0");
  if (numeric_bins < 1) throw std::invalid_argument("numeric_bins must be >= 1");
}

double hoeffding_bound(double range, double confidence, double n) {
  return std::sqrt(range * range * std::log(1.0 / confidence) / (2.0 * n));
}

// ---------------------------------------------------------------------------
// LeafModel

void LeafModel::learn(const FeatureVector& x, SlaLabel y) {
  if (majority_prediction().label == y) mc_correct_ += 1.0;
  if (naive_bayes_prediction(x).label == y) nb_correct_ += 1.0;

  const auto c = static_cast<std::size_t>(y);
  counts_[c] += 1.0;
  for (std::size_t i = 0; i < kNumFeatures; ++i) attributes_[i][c].add(x[i]);
}

std::array<double, 2> LeafModel::class_distribution() const {
  const double total = total_weight();
  if (total <= 0.0) return prior_;
  return {counts_[0] / total, counts_[1] / total};
}

Prediction LeafModel::majority_prediction() const {
  return Prediction::from_score(class_distribution()[kViolated]);
}

Prediction LeafModel::naive_bayes_prediction(const FeatureVector& x) const {
  const double total = total_weight();
  if (total <= 0.0) return Prediction::from_score(prior_[kViolated]);

  std::array<double, 2> log_post{};
  for (std::size_t c = 0; c < 2; ++c) {
    if (counts_[c] <= 0.0) {
      log_post[c] = -std::numeric_limits<double>::infinity();
      continue;
    }
    double lp = std::log(counts_[c] / total);
    for (std::size_t i = 0; i < kNumFeatures; ++i) lp += attributes_[i][c].log_pdf(x[i]);
    log_post[c] = lp;
  }
  const double top = std::max(log_post[0], log_post[1]);
  const double pv = std::exp(log_post[kViolated] - top);
  const double pc = std::exp(log_post[kConforming] - top);
  return Prediction::from_score(pv / (pv + pc));
}

Prediction LeafModel::predict(const FeatureVector& x, LeafPredictor predictor) const {
  switch (predictor) {
    case LeafPredictor::majority:
      return majority_prediction();
    case LeafPredictor::naive_bayes:
      return naive_bayes_prediction(x);
    case LeafPredictor::adaptive_nb:
      break;
  }
  // Ties go to the majority class predictor.
  return nb_correct_ > mc_correct_ ? naive_bayes_prediction(x) : majority_prediction();
}

nlohmann::json LeafModel::to_json() const {
  nlohmann::json attrs = nlohmann::json::array();
  for (const auto& per_class : attributes_) {
    attrs.push_back({per_class[0].to_json(), per_class[1].to_json()});
  }
  return {{"counts", counts_},
          {"prior", prior_},
          {"mc_correct", mc_correct_},
          {"nb_correct", nb_correct_},
          {"last_attempt", weight_at_last_attempt},
          {"attributes", attrs}};
}

LeafModel LeafModel::from_json(const nlohmann::json& j) {
  LeafModel leaf(j.at("prior").get<std::array<double, 2>>());
  leaf.counts_ = j.at("counts").get<std::array<double, 2>>();
  leaf.mc_correct_ = j.at("mc_correct").get<double>();
  leaf.nb_correct_ = j.at("nb_correct").get<double>();
  leaf.weight_at_last_attempt = j.at("last_attempt").get<double>();
  const auto& attrs = j.at("attributes");
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    for (std::size_t c = 0; c < 2; ++c) {
      leaf.attributes_[i][c] = GaussianEstimator::from_json(attrs.at(i).at(c));
    }
  }
  return leaf;
}

// ---------------------------------------------------------------------------
// Split evaluation

AttributeSplit best_attribute_split(const LeafModel& leaf, std::size_t feature, int bins) {
  const auto& conf = leaf.attribute(feature, SlaLabel::conforming);
  const auto& viol = leaf.attribute(feature, SlaLabel::violated);
  const double lo = std::min(conf.min(), viol.min());
  const double hi = std::max(conf.max(), viol.max());
  AttributeSplit best;
  if (!(hi > lo)) return best;

  const double n_conf = leaf.count(SlaLabel::conforming);
  const double n_viol = leaf.count(SlaLabel::violated);
  const double total = n_conf + n_viol;
  const double parent = entropy(n_conf, n_viol);

  for (int i = 1; i <= bins; ++i) {
    const double t = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins + 1);
    const double left_conf = conf.weight_at_or_below(t);
    const double left_viol = viol.weight_at_or_below(t);
    const double right_conf = n_conf - left_conf;
    const double right_viol = n_viol - left_viol;
    const double left = left_conf + left_viol;
    const double right = right_conf + right_viol;
    if (left < kMinBranchFraction * total || right < kMinBranchFraction * total) continue;

    const double gain = parent - (left / total) * entropy(left_conf, left_viol) -
                        (right / total) * entropy(right_conf, right_viol);
    if (!best.valid || gain > best.gain) best = {gain, t, true};
  }
  return best;
}

SplitDecision hoeffding_try_split(const LeafModel& leaf, const HoeffdingTreeConfig& config) {
  SplitDecision d;
  const double n = leaf.total_weight();
  if (n <= 0.0) return d;
  // Information gain for two classes lies in [0, log2(2)].
  d.epsilon = hoeffding_bound(1.0, config.split_confidence, n);
  if (leaf.count(SlaLabel::violated) <= 0.0 || leaf.count(SlaLabel::conforming) <= 0.0) return d;

  bool have_best = false;
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    const AttributeSplit s = best_attribute_split(leaf, f, config.numeric_bins);
    const double gain = s.valid ? s.gain : 0.0;
    if (s.valid && (!have_best || gain > d.best_gain)) {
      if (have_best) d.second_gain = std::max(d.second_gain, d.best_gain);
      d.best_gain = gain;
      d.feature = f;
      d.threshold = s.threshold;
      have_best = true;
    } else {
      d.second_gain = std::max(d.second_gain, gain);
    }
  }
  if (!have_best || !(d.best_gain > 0.0)) return d;
  d.split = (d.best_gain - d.second_gain > d.epsilon) || (d.epsilon < config.tie_threshold);
  return d;
}

// ---------------------------------------------------------------------------
// HoeffdingTree

HoeffdingTree::HoeffdingTree(HoeffdingTreeConfig config) : config_(config) {
  config_.validate();
  reset();
}

void HoeffdingTree::reset() {
  nodes_.clear();
  nodes_.push_back(Node{.leaf = LeafModel{}});
}

std::size_t HoeffdingTree::find_leaf(const FeatureVector& x) const {
  std::size_t i = 0;
  while (!nodes_[i].leaf) {
    const Node& n = nodes_[i];
    i = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return i;
}

Prediction HoeffdingTree::predict(const FeatureVector& x) const {
  return nodes_[find_leaf(x)].leaf->predict(x, config_.leaf_predictor);
}

void HoeffdingTree::learn(const LabeledSample& sample) {
  const std::size_t idx = find_leaf(sample.features);
  LeafModel& leaf = *nodes_[idx].leaf;
  leaf.learn(sample.features, sample.label);

  if (leaf.total_weight() - leaf.weight_at_last_attempt < config_.grace_period) return;
  leaf.weight_at_last_attempt = leaf.total_weight();

  const SplitDecision d = hoeffding_try_split(leaf, config_);
  if (!d.split) return;

  const auto prior = leaf.class_distribution();
  const std::size_t left = nodes_.size();
  nodes_.push_back(Node{.leaf = LeafModel(prior)});
  nodes_.push_back(Node{.leaf = LeafModel(prior)});
  Node& parent = nodes_[idx];  // re-fetch: push_back may have reallocated
  parent.feature = d.feature;
  parent.threshold = d.threshold;
  parent.left = left;
  parent.right = left + 1;
  parent.leaf.reset();
}

std::size_t HoeffdingTree::num_leaves() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.leaf.has_value(); }));
}

std::size_t HoeffdingTree::depth() const {
  std::function<std::size_t(std::size_t)> walk = [&](std::size_t i) -> std::size_t {
    if (nodes_[i].leaf) return 0;
    return 1 + std::max(walk(nodes_[i].left), walk(nodes_[i].right));
  };
  return walk(0);
}

std::optional<std::size_t> HoeffdingTree::root_split_feature() const {
  if (nodes_[0].leaf) return std::nullopt;
  return nodes_[0].feature;
}

nlohmann::json HoeffdingTree::to_json() const {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : nodes_) {
    if (n.leaf) {
      nodes.push_back({{"leaf", n.leaf->to_json()}});
    } else {
      nodes.push_back(
          {{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
    }
  }
  return {{"kind", "hoeffding_tree"},
          {"version", kSnapshotVersion},
          {"config", hoeffding_config_to_json(config_)},
          {"nodes", nodes}};
}

HoeffdingTree HoeffdingTree::from_json(const nlohmann::json& j) {
  expect_kind(j, "hoeffding_tree");
  HoeffdingTree tree(hoeffding_config_from_json(j.at("config")));
  tree.nodes_.clear();
  const auto& nodes = j.at("nodes");
  for (const auto& jn : nodes) {
    Node n;
    if (jn.contains("leaf")) {
      n.leaf = LeafModel::from_json(jn.at("leaf"));
    } else {
      n.feature = jn.at("feature").get<std::size_t>();
      n.threshold = jn.at("threshold").get<double>();
      n.left = jn.at("left").get<std::size_t>();
      n.right = jn.at("right").get<std::size_t>();
      if (n.feature >= kNumFeatures || n.left >= nodes.size() || n.right >= nodes.size()) {
        throw SnapshotError("hoeffding_tree snapshot: bad node reference");
      }
    }
    tree.nodes_.push_back(std::move(n));
  }
  if (tree.nodes_.empty()) throw SnapshotError("hoeffding_tree snapshot: no nodes");
  return tree;
}

std::string HoeffdingTree::serialize() const { return to_json().dump(); }

}  // namespace slapred
