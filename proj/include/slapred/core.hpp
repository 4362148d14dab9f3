#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace slapred {

inline constexpr std::size_t kNumFeatures = 21;

// Server device metrics sampled once per second, in canonical column order.
enum class Feature : std::size_t {
  cpu_idle,
  cpu_user,
  cpu_system,
  cpu_iowait,
  mem_used,
  mem_committed,
  swap_used,
  swap_cached,
  io_read_tps,
  io_write_tps,
  io_bytes_read,
  io_bytes_written,
  block_reads,
  block_writes,
  proc_new,
  context_switches,
  net_rx_packets,
  net_tx_packets,
  net_rx_kb,
  net_tx_kb,
  iface_util,
};

inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "cpu_idle",       "cpu_user",         "cpu_system",     "cpu_iowait",
    "mem_used",       "mem_committed",    "swap_used",      "swap_cached",
    "io_read_tps",    "io_write_tps",     "io_bytes_read",  "io_bytes_written",
    "block_reads",    "block_writes",     "proc_new",       "context_switches",
    "net_rx_packets", "net_tx_packets",   "net_rx_kb",      "net_tx_kb",
    "iface_util",
};

// Percent-valued features are bounded to [0, 100]; every other feature is >= 0.
constexpr bool is_percent_feature(std::size_t index) {
  return index <= static_cast<std::size_t>(Feature::cpu_iowait) ||
         index == static_cast<std::size_t>(Feature::iface_util);
}

/// Index of a feature by column name, or nullopt when the name is unknown.
std::optional<std::size_t> feature_index(std::string_view name);

struct FeatureVector {
  std::array<double, kNumFeatures> values{};

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](Feature f) { return values[static_cast<std::size_t>(f)]; }
  double operator[](Feature f) const { return values[static_cast<std::size_t>(f)]; }

  /// True when every value is finite and inside its feature's domain.
  bool valid() const;

  /// Throws std::invalid_argument naming the first offending feature.
  void validate() const;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

struct ServiceSample {
  double timestamp = 0.0;
  double fps = 0.0;
  double abs = 0.0;

  bool valid() const;

  friend bool operator==(const ServiceSample&, const ServiceSample&) = default;
};

enum class SlaLabel : std::uint8_t { conforming = 0, violated = 1 };

std::string_view to_string(SlaLabel label);

struct LabeledSample {
  double timestamp = 0.0;
  FeatureVector features;
  SlaLabel label = SlaLabel::conforming;

  friend bool operator==(const LabeledSample&, const LabeledSample&) = default;
};

inline constexpr double kDecisionThreshold = 0.5;

struct Prediction {
  SlaLabel label = SlaLabel::conforming;
  // Posterior probability of a violation.
  double score = 0.5;

  static Prediction from_score(double score, double threshold = kDecisionThreshold) {
    return {score >= threshold ? SlaLabel::violated : SlaLabel::conforming, score};
  }

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

// Positive class is `violated`.
struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  void add(SlaLabel actual, SlaLabel predicted);
  std::uint64_t total() const { return tp + fp + tn + fn; }

  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

enum class FarVariant { as_printed, fpr };

std::string_view to_string(FarVariant variant);

// A metric whose denominator is zero is left empty and printed as "undefined".
struct MetricsReport {
  double ca = 0.0;
  std::optional<double> ba;
  std::optional<double> tpr;
  std::optional<double> tnr;
  // FN / (FN + TP), a miss rate; the default FAR definition.
  std::optional<double> far_as_printed;
  // FP / (FP + TN), the conventional false positive rate.
  std::optional<double> far_fpr;
  FarVariant far_variant = FarVariant::as_printed;

  std::optional<double> far() const {
    return far_variant == FarVariant::as_printed ? far_as_printed : far_fpr;
  }

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

class EmptyEvaluation : public std::runtime_error {
 public:
  EmptyEvaluation() : std::runtime_error("empty evaluation") {}
};

MetricsReport compute_metrics(const ConfusionMatrix& cm,
                              FarVariant far_variant = FarVariant::as_printed);

/// Fixed-precision text for a metric, "undefined" for an empty one.
std::string format_metric(std::optional<double> value, int precision = 3);

}  // namespace slapred
