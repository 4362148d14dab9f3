#pragma once

#include <cstdint>
#include <algorithm>
#include <random>
#include <vector>

#include "slapred/core.hpp"

namespace slapred::testing {

inline FeatureVector uniform_features(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 100.0);
  FeatureVector x;
  for (auto& v : x.values) v = u(rng);
  return x;
}

// Noise-free axis-aligned concept: violated iff cpu_idle < 40 and net_tx_packets > 60,
// or cpu_user > 85. Every feature is uniform on [0, 100].
inline SlaLabel axis_concept(const FeatureVector& x) {
  const bool v = (x[Feature::cpu_idle] < 40.0 && x[Feature::net_tx_packets] > 60.0) || x[Feature::cpu_user] > 85.0;
  return v ? SlaLabel::violated : SlaLabel::conforming;
}

inline std::vector<LabeledSample> axis_stream(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<LabeledSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = uniform_features(rng);
    out.push_back({static_cast<double>(i), x, axis_concept(x)});
  }
  return out;
}

// Two Gaussian clusters in (cpu_user, cpu_system), linearly separable with a wide
// margin; remaining features are constant.
inline std::vector<LabeledSample> two_clusters(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 4.0);
  std::vector<LabeledSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool v = i % 2 == 1;
    FeatureVector x;
    x[Feature::cpu_idle] = 50.0;
    x[Feature::cpu_user] = std::clamp((v ? 70.0 : 30.0) + noise(rng), 0.0, 100.0);
    x[Feature::cpu_system] = std::clamp((v ? 60.0 : 25.0) + noise(rng), 0.0, 100.0);
    out.push_back({static_cast<double>(i), x, v ? SlaLabel::violated : SlaLabel::conforming});
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

template <typename Model>
double accuracy(const Model& model, const std::vector<LabeledSample>& data) {
  std::size_t hits = 0;
  for (const auto& s : data) hits += model.predict(s.features).label == s.label ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace slapred::testing
