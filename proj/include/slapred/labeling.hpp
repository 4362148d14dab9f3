#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "slapred/core.hpp"

namespace slapred {

struct SloThresholds {
  double fps_threshold = 20.0;
  double abs_threshold = 20.0;
  // The audio objective is evaluated only on request; video frame rate alone drives the SLA.
  bool use_abs = false;

  void validate() const;
};

/// An SLA is violated when any enabled objective drops below its threshold.
SlaLabel evaluate_sla(const ServiceSample& sample, const SloThresholds& thresholds = {});

struct DeviceSample {
  double timestamp = 0.0;
  FeatureVector features;
};

struct JoinResult {
  std::vector<LabeledSample> samples;
  std::size_t dropped = 0;
  std::vector<std::string> warnings;
};

inline constexpr double kJoinTolerance = 0.5;

/// Pairs each device sample with the nearest service sample within `tolerance`
/// seconds (ties go to the earlier service sample). A service sample labels at
/// most one device sample: when several device samples pick the same one, the
/// closest keeps it (ties go to the earlier device sample) and the rest are
/// dropped. Both inputs must be sorted by timestamp.
JoinResult join_streams(std::span<const DeviceSample> device,
                        std::span<const ServiceSample> service,
                        const SloThresholds& thresholds = {},
                        double tolerance = kJoinTolerance);

}  // namespace slapred
