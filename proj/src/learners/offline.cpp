#include "slapred/learners/offline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <utility>

#include "slapred/learners/sgd_logistic.hpp"
#include "slapred/seed.hpp"
#include "snapshot_io.hpp"

namespace slapred {

std::string_view to_string(OfflineMethod m) {
  switch (m) {
    case OfflineMethod::logistic:
      return "logistic";
    case OfflineMethod::cart:
      return "cart";
    case OfflineMethod::random_forest:
      return "random_forest";
  }
  return "logistic";
}

OfflineMethod offline_method_from_string(std::string_view name) {
  if (name == "logistic") return OfflineMethod::logistic;
  if (name == "cart") return OfflineMethod::cart;
  if (name == "random_forest") return OfflineMethod::random_forest;
  throw std::invalid_argument("unknown offline method: " + std::string(name));
}

void require_both_classes(std::span<const LabeledSample> data) {
  bool seen[2] = {false, false};
  for (const auto& s : data) seen[static_cast<std::size_t>(s.label)] = true;
  if (!seen[0] || !seen[1]) throw DegenerateTrainingSet();
}

// ---------------------------------------------------------------------------
// BatchLogistic

namespace {

double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

struct DesignMatrix {
  std::vector<std::array<double, kNumFeatures>> rows;
  std::vector<double> targets;
};

double mean_log_likelihood(const DesignMatrix& d, const std::array<double, kNumFeatures>& w, double b) {
  double ll = 0.0;
  for (std::size_t k = 0; k < d.rows.size(); ++k) {
    double t = b;
    for (std::size_t i = 0; i < kNumFeatures; ++i) t += w[i] * d.rows[k][i];
    ll += d.targets[k] * t - softplus(t);
  }
  return ll / static_cast<double>(d.rows.size());
}

}  // namespace

BatchLogistic BatchLogistic::train(std::span<const LabeledSample> data, const BatchLogisticConfig& config) {
  require_both_classes(data);
  BatchLogistic m;
  const double n = static_cast<double>(data.size());
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    double sum = 0.0;
    for (const auto& s : data) sum += s.features[i];
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& s : data) ss += (s.features[i] - mean) * (s.features[i] - mean);
    const double sd = std::sqrt(ss / n);
    m.mean_[i] = mean;
    m.scale_[i] = sd > 0.0 ? sd : 1.0;
  }

  DesignMatrix d;
  d.rows.reserve(data.size());
  d.targets.reserve(data.size());
  for (const auto& s : data) {
    std::array<double, kNumFeatures> z;
    for (std::size_t i = 0; i < kNumFeatures; ++i) z[i] = (s.features[i] - m.mean_[i]) / m.scale_[i];
    d.rows.push_back(z);
    d.targets.push_back(s.label == SlaLabel::violated ? 1.0 : 0.0);
  }

  double ll = mean_log_likelihood(d, m.weights_, m.bias_);
  double step = config.initial_step;
  int it = 0;
  for (; it < config.max_iterations; ++it) {
    std::array<double, kNumFeatures> grad{};
    double grad_bias = 0.0;
    for (std::size_t k = 0; k < d.rows.size(); ++k) {
      double t = m.bias_;
      for (std::size_t i = 0; i < kNumFeatures; ++i) t += m.weights_[i] * d.rows[k][i];
      const double r = d.targets[k] - sigmoid(t);
      grad_bias += r;
      for (std::size_t i = 0; i < kNumFeatures; ++i) grad[i] += r * d.rows[k][i];
    }
    for (auto& g : grad) g /= n;
    grad_bias /= n;

    bool accepted = false;
    double next_ll = ll;
    std::array<double, kNumFeatures> next_w{};
    double next_b = 0.0;
    for (int halvings = 0; halvings < 60 && !accepted; ++halvings) {
      for (std::size_t i = 0; i < kNumFeatures; ++i) next_w[i] = m.weights_[i] + step * grad[i];
      next_b = m.bias_ + step * grad_bias;
      next_ll = mean_log_likelihood(d, next_w, next_b);
      if (std::isfinite(next_ll) && next_ll >= ll) {
        accepted = true;
      } else {
        step *= 0.5;
      }
    }
    if (!accepted) break;
    m.weights_ = next_w;
    m.bias_ = next_b;
    const double change = std::abs(next_ll - ll) / std::max(std::abs(ll), 1e-300);
    ll = next_ll;
    step *= 1.25;
    if (change < config.relative_tolerance) {
      ++it;
      break;
    }
  }
  m.iterations_ = it;
  m.log_likelihood_ = ll;
  return m;
}

Prediction BatchLogistic::predict(const FeatureVector& x) const {
  double t = bias_;
  for (std::size_t i = 0; i < kNumFeatures; ++i) t += weights_[i] * (x[i] - mean_[i]) / scale_[i];
  return Prediction::from_score(sigmoid(t));
}

nlohmann::json BatchLogistic::to_json() const {
  return {{"kind", "logistic"}, {"version", kSnapshotVersion}, {"mean", mean_},
          {"scale", scale_},    {"weights", weights_},          {"bias", bias_},
          {"iterations", iterations_}, {"log_likelihood", log_likelihood_}};
}

BatchLogistic BatchLogistic::from_json(const nlohmann::json& j) {
  expect_kind(j, "logistic");
  BatchLogistic m;
  m.mean_ = j.at("mean").get<std::array<double, kNumFeatures>>();
  m.scale_ = j.at("scale").get<std::array<double, kNumFeatures>>();
  m.weights_ = j.at("weights").get<std::array<double, kNumFeatures>>();
  m.bias_ = j.at("bias").get<double>();
  m.iterations_ = j.at("iterations").get<int>();
  m.log_likelihood_ = j.at("log_likelihood").get<double>();
  return m;
}

std::string BatchLogistic::serialize() const { return to_json().dump(); }

// ---------------------------------------------------------------------------
// CartTree

namespace {

struct BestSplit {
  int feature = -1;
  double threshold = 0.0;
  double impurity = 0.0;  // sum over children of n_child * gini_child
};

class CartBuilder {
 public:
  CartBuilder(std::span<const LabeledSample> data, const CartConfig& config, std::uint64_t seed)
      : data_(data), config_(config), rng_(seed) {}

  std::vector<CartTree::Node> build(std::vector<std::uint32_t> indices) {
    indices_ = std::move(indices);
    nodes_.clear();
    struct Pending {
      std::int32_t node;
      std::size_t begin;
      std::size_t end;
    };
    std::vector<Pending> stack;
    nodes_.emplace_back();
    stack.push_back({0, 0, indices_.size()});
    while (!stack.empty()) {
      const Pending p = stack.back();
      stack.pop_back();
      const auto split = grow(p.node, p.begin, p.end);
      if (!split) continue;
      const std::int32_t left = static_cast<std::int32_t>(nodes_.size());
      nodes_.emplace_back();
      nodes_.emplace_back();
      nodes_[p.node].left = left;
      nodes_[p.node].right = left + 1;
      // Right child is pushed first so the left subtree is built first.
      stack.push_back({left + 1, split->second, p.end});
      stack.push_back({left, p.begin, split->second});
    }
    return std::move(nodes_);
  }

 private:
  // Fills node statistics; returns (node, partition point) when the node splits.
  std::optional<std::pair<std::int32_t, std::size_t>> grow(std::int32_t id, std::size_t begin,
                                                           std::size_t end) {
    const std::size_t n = end - begin;
    std::size_t violated = 0;
    for (std::size_t k = begin; k < end; ++k) {
      if (data_[indices_[k]].label == SlaLabel::violated) ++violated;
    }
    CartTree::Node& node = nodes_[id];
    node.samples = static_cast<std::uint32_t>(n);
    node.score = n > 0 ? static_cast<double>(violated) / static_cast<double>(n) : 0.5;
    if (n < static_cast<std::size_t>(config_.min_split) || violated == 0 || violated == n) {
      return std::nullopt;
    }

    const BestSplit best = find_split(begin, end);
    if (best.feature < 0) return std::nullopt;

    const auto mid = std::partition(
        indices_.begin() + static_cast<std::ptrdiff_t>(begin), indices_.begin() + static_cast<std::ptrdiff_t>(end),
        [&](std::uint32_t i) { return data_[i].features[static_cast<std::size_t>(best.feature)] <= best.threshold; });
    const auto split_at = static_cast<std::size_t>(mid - indices_.begin());
    if (split_at == begin || split_at == end) return std::nullopt;

    CartTree::Node& again = nodes_[id];
    again.feature = best.feature;
    again.threshold = best.threshold;
    return std::make_pair(id, split_at);
  }

  std::vector<std::size_t> candidate_features() {
    std::vector<std::size_t> features(kNumFeatures);
    std::iota(features.begin(), features.end(), 0);
    const int k = config_.features_per_split;
    if (k <= 0 || k >= static_cast<int>(kNumFeatures)) return features;
    for (int i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(i), kNumFeatures - 1);
      std::swap(features[static_cast<std::size_t>(i)], features[pick(rng_)]);
    }
    features.resize(static_cast<std::size_t>(k));
    std::sort(features.begin(), features.end());
    return features;
  }

  BestSplit find_split(std::size_t begin, std::size_t end) {
    const std::size_t n = end - begin;
    std::size_t total_violated = 0;
    for (std::size_t k = begin; k < end; ++k) {
      if (data_[indices_[k]].label == SlaLabel::violated) ++total_violated;
    }

    BestSplit best;
    for (const std::size_t f : candidate_features()) {
      column_.clear();
      for (std::size_t k = begin; k < end; ++k) {
        const auto& s = data_[indices_[k]];
        column_.emplace_back(s.features[f], s.label == SlaLabel::violated ? 1 : 0);
      }
      std::sort(column_.begin(), column_.end());

      std::size_t left_violated = 0;
      for (std::size_t k = 1; k < n; ++k) {
        left_violated += static_cast<std::size_t>(column_[k - 1].second);
        if (!(column_[k].first > column_[k - 1].first)) continue;
        const double nl = static_cast<double>(k);
        const double nr = static_cast<double>(n - k);
        const double vl = static_cast<double>(left_violated);
        const double vr = static_cast<double>(total_violated - left_violated);
        // n * gini = 2 * violated * conforming / n
        const double impurity = 2.0 * vl * (nl - vl) / nl + 2.0 * vr * (nr - vr) / nr;
        if (best.feature < 0 || impurity < best.impurity) {
          const double a = column_[k - 1].first;
          const double b = column_[k].first;
          double t = a + (b - a) / 2.0;
          if (!(t < b)) t = a;
          best = {static_cast<int>(f), t, impurity};
        }
      }
    }
    return best;
  }

  std::span<const LabeledSample> data_;
  CartConfig config_;
  std::mt19937_64 rng_;
  std::vector<std::uint32_t> indices_;
  std::vector<CartTree::Node> nodes_;
  std::vector<std::pair<double, int>> column_;
};

std::vector<std::uint32_t> all_indices(std::size_t n) {
  std::vector<std::uint32_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  return idx;
}

nlohmann::json cart_nodes_to_json(const std::vector<CartTree::Node>& nodes) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& n : nodes) {
    out.push_back({n.feature, n.threshold, n.left, n.right, n.score, n.samples});
  }
  return out;
}

std::vector<CartTree::Node> cart_nodes_from_json(const nlohmann::json& j) {
  std::vector<CartTree::Node> nodes;
  for (const auto& jn : j) {
    CartTree::Node n;
    n.feature = jn.at(0).get<int>();
    n.threshold = jn.at(1).get<double>();
    n.left = jn.at(2).get<std::int32_t>();
    n.right = jn.at(3).get<std::int32_t>();
    n.score = jn.at(4).get<double>();
    n.samples = jn.at(5).get<std::uint32_t>();
    nodes.push_back(n);
  }
  const auto count = static_cast<std::int32_t>(nodes.size());
  for (const auto& n : nodes) {
    if (n.feature >= static_cast<int>(kNumFeatures) ||
        (n.feature >= 0 && (n.left <= 0 || n.right <= 0 || n.left >= count || n.right >= count))) {
      throw SnapshotError("cart snapshot: bad node reference");
    }
  }
  if (nodes.empty()) throw SnapshotError("cart snapshot: no nodes");
  return nodes;
}

}  // namespace

CartTree CartTree::train(std::span<const LabeledSample> data, const CartConfig& config,
                         std::uint64_t rng_seed) {
  require_both_classes(data);
  CartTree tree;
  tree.nodes_ = CartBuilder(data, config, rng_seed).build(all_indices(data.size()));
  return tree;
}

Prediction CartTree::predict(const FeatureVector& x) const {
  std::size_t i = 0;
  while (nodes_[i].feature >= 0) {
    const Node& n = nodes_[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return Prediction::from_score(nodes_[i].score);
}

std::size_t CartTree::num_leaves() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.feature < 0; }));
}

nlohmann::json CartTree::to_json() const {
  return {{"kind", "cart"}, {"version", kSnapshotVersion}, {"nodes", cart_nodes_to_json(nodes_)}};
}

CartTree CartTree::from_json(const nlohmann::json& j) {
  expect_kind(j, "cart");
  CartTree t;
  t.nodes_ = cart_nodes_from_json(j.at("nodes"));
  return t;
}

std::string CartTree::serialize() const { return to_json().dump(); }

// ---------------------------------------------------------------------------
// RandomForest

RandomForest RandomForest::train(std::span<const LabeledSample> data, const RandomForestConfig& config,
                                 std::uint64_t seed) {
  require_both_classes(data);
  if (config.trees < 1) throw std::invalid_argument("random forest needs at least one tree");
  RandomForest forest;
  forest.trees_.reserve(static_cast<std::size_t>(config.trees));
  const CartConfig cart{config.min_split, config.features_per_split};
  for (int t = 0; t < config.trees; ++t) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    std::vector<std::uint32_t> sample;
    if (config.bootstrap) {
      std::uniform_int_distribution<std::uint32_t> draw(0, static_cast<std::uint32_t>(data.size() - 1));
      sample.resize(data.size());
      for (auto& s : sample) s = draw(rng);
    } else {
      sample = all_indices(data.size());
    }
    CartTree tree;
    tree.nodes_ = CartBuilder(data, cart, rng()).build(std::move(sample));
    forest.trees_.push_back(std::move(tree));
  }
  return forest;
}

Prediction RandomForest::predict(const FeatureVector& x) const {
  std::size_t votes = 0;
  for (const auto& t : trees_) {
    if (t.predict(x).label == SlaLabel::violated) ++votes;
  }
  return Prediction::from_score(static_cast<double>(votes) / static_cast<double>(trees_.size()));
}

nlohmann::json RandomForest::to_json() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : trees_) trees.push_back(cart_nodes_to_json(t.nodes_));
  return {{"kind", "random_forest"}, {"version", kSnapshotVersion}, {"trees", trees}};
}

RandomForest RandomForest::from_json(const nlohmann::json& j) {
  expect_kind(j, "random_forest");
  RandomForest f;
  for (const auto& jt : j.at("trees")) {
    CartTree t;
    t.nodes_ = cart_nodes_from_json(jt);
    f.trees_.push_back(std::move(t));
  }
  if (f.trees_.empty()) throw SnapshotError("random_forest snapshot: no trees");
  return f;
}

std::string RandomForest::serialize() const { return to_json().dump(); }

// ---------------------------------------------------------------------------

std::unique_ptr<OfflineModel> train_offline(OfflineMethod method, std::span<const LabeledSample> data,
                                            const OfflineConfig& config, std::uint64_t seed) {
  require_both_classes(data);
  switch (method) {
    case OfflineMethod::logistic:
      return std::make_unique<BatchLogistic>(BatchLogistic::train(data, config.logistic));
    case OfflineMethod::cart:
      return std::make_unique<CartTree>(CartTree::train(data, config.cart, seed));
    case OfflineMethod::random_forest:
      return std::make_unique<RandomForest>(RandomForest::train(data, config.forest, seed));
  }
  throw std::invalid_argument("unknown offline method");
}

}  // namespace slapred
