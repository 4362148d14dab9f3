#include "slapred/learners/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace slapred {

void GaussianEstimator::add(double x, double w) {
  if (w <= 0.0) return;
  if (weight_ == 0.0) {
    weight_ = w;
    mean_ = x;
    m2_ = 0.0;
  } else {
    const double total = weight_ + w;
    const double delta = x - mean_;
    mean_ += delta * w / total;
    m2_ += w * delta * (x - mean_);
    weight_ = total;
  }
  min_ = std::min(min_, x);
  max_ = std::max(max_, x);
}

double GaussianEstimator::variance() const {
  return weight_ > 1.0 ? m2_ / (weight_ - 1.0) : 0.0;
}

double GaussianEstimator::stddev() const { return std::sqrt(variance()); }

double GaussianEstimator::log_pdf(double x) const {
  const double floor = 1e-6 * std::max(1.0, std::abs(mean_));
  const double sd = std::max(stddev(), floor);
  const double z = (x - mean_) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

double GaussianEstimator::weight_at_or_below(double x) const {
  if (weight_ == 0.0 || x < min_) return 0.0;
  if (x >= max_) return weight_;
  const double sd = stddev();
  if (sd <= 0.0) return x >= mean_ ? weight_ : 0.0;
  const double z = (x - mean_) / sd;
  return weight_ * 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

nlohmann::json GaussianEstimator::to_json() const {
  if (weight_ == 0.0) return nlohmann::json::array({0.0, 0.0, 0.0, 0.0, 0.0});
  return nlohmann::json::array({weight_, mean_, m2_, min_, max_});
}

GaussianEstimator GaussianEstimator::from_json(const nlohmann::json& j) {
  GaussianEstimator g;
  const double w = j.at(0).get<double>();
  if (w == 0.0) return g;
  g.weight_ = w;
  g.mean_ = j.at(1).get<double>();
  g.m2_ = j.at(2).get<double>();
  g.min_ = j.at(3).get<double>();
  g.max_ = j.at(4).get<double>();
  return g;
}

}  // namespace slapred
