#include "slapred/labeling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

namespace slapred {

void SloThresholds::validate() const {
  if (!(fps_threshold > 0.0) || !(abs_threshold > 0.0)) {
    throw std::invalid_argument("SLO thresholds must be positive");
  }
}

SlaLabel evaluate_sla(const ServiceSample& sample, const SloThresholds& thresholds) {
  const bool fps_violated = sample.fps < thresholds.fps_threshold;
  const bool abs_violated = thresholds.use_abs && sample.abs < thresholds.abs_threshold;
  return (fps_violated || abs_violated) ? SlaLabel::violated : SlaLabel::conforming;
}

namespace {

std::optional<std::size_t> nearest_service(std::span<const ServiceSample> service, double t,
                                           double tolerance) {
  const auto by_time = [](const ServiceSample& s, double v) { return s.timestamp < v; };
  const auto right = std::lower_bound(service.begin(), service.end(), t, by_time);

  std::optional<std::size_t> best;
  double best_dist = std::numeric_limits<double>::infinity();
  if (right != service.begin()) {
    // First element of the run of equal timestamps immediately before t.
    const double left_t = std::prev(right)->timestamp;
    const auto left = std::lower_bound(service.begin(), right, left_t, by_time);
    best = static_cast<std::size_t>(left - service.begin());
    best_dist = t - left_t;
  }
  if (right != service.end() && right->timestamp - t < best_dist) {
    best = static_cast<std::size_t>(right - service.begin());
    best_dist = right->timestamp - t;
  }
  if (best && best_dist <= tolerance) return best;
  return std::nullopt;
}

}  // namespace

JoinResult join_streams(std::span<const DeviceSample> device,
                        std::span<const ServiceSample> service,
                        const SloThresholds& thresholds, double tolerance) {
  thresholds.validate();
  JoinResult result;
  if (device.empty() || service.empty()) {
    result.dropped = device.size();
    result.warnings.emplace_back("empty input stream: nothing to join");
    return result;
  }

  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> holder(service.size(), kNone);
  std::vector<std::size_t> choice(device.size(), kNone);
  for (std::size_t i = 0; i < device.size(); ++i) {
    if (i > 0 && !(device[i].timestamp > device[i - 1].timestamp)) {
      throw std::invalid_argument("device timestamps must strictly increase");
    }
    const auto j = nearest_service(service, device[i].timestamp, tolerance);
    if (!j) continue;
    choice[i] = *j;
    const std::size_t current = holder[*j];
    if (current == kNone ||
        std::abs(service[*j].timestamp - device[i].timestamp) <
            std::abs(service[*j].timestamp - device[current].timestamp)) {
      holder[*j] = i;
    }
  }

  for (std::size_t i = 0; i < device.size(); ++i) {
    const std::size_t j = choice[i];
    if (j == kNone || holder[j] != i) {
      ++result.dropped;
      continue;
    }
    if (!service[j].valid()) {
      throw std::invalid_argument("invalid service sample at t=" +
                                  std::to_string(service[j].timestamp));
    }
    result.samples.push_back(
        {device[i].timestamp, device[i].features, evaluate_sla(service[j], thresholds)});
  }
  if (result.dropped > 0) {
    result.warnings.push_back(std::to_string(result.dropped) +
                              " device samples had no service sample within tolerance");
  }
  return result;
}

}  // namespace slapred
