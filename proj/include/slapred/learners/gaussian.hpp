#pragma once

#include <limits>

#include "json.hpp"

namespace slapred {

// Weighted running mean/variance (Welford) with observed range.
class GaussianEstimator {
 public:
  void add(double x, double w = 1.0);

  double weight() const { return weight_; }
  double mean() const { return mean_; }
  double variance() const;
  double stddev() const;
  double min() const { return min_; }
  double max() const { return max_; }

  /// Log density with a small relative floor on the standard deviation so that
  /// a single observation still yields a finite (very peaked) density.
  double log_pdf(double x) const;

  /// Estimated observed weight at or below `x`: exact outside [min, max],
  /// Gaussian approximation inside.
  double weight_at_or_below(double x) const;

  nlohmann::json to_json() const;
  static GaussianEstimator from_json(const nlohmann::json& j);

  friend bool operator==(const GaussianEstimator&, const GaussianEstimator&) = default;

 private:
  double weight_ = 0.0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double min_ = std::numeric_limits<double>::infinity();
  double max_ = -std::numeric_limits<double>::infinity();
};

}  // namespace slapred
