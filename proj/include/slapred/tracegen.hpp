#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "slapred/core.hpp"
#include "slapred/labeling.hpp"

namespace slapred {

// ---------------------------------------------------------------------------
// Load processes (rates in clients per minute, times in seconds)

struct PeriodicLoad {
  double base_rate = 30.0;
  double amplitude = 20.0;
  double period = 3600.0;
};

struct FlashCrowdLoad {
  double base_rate = 5.0;
  double events_per_hour = 10.0;
  double peak_rate = 50.0;
  double ramp_up = 60.0;
  double sustain = 60.0;
  double ramp_down = 240.0;
  std::vector<double> event_starts;  // seconds from trace start
};

struct LoadPattern {
  std::variant<PeriodicLoad, FlashCrowdLoad> shape;
  double holding_time_mean = 60.0;
  std::size_t duration = 0;  // seconds
  std::uint64_t seed = 0;

  static LoadPattern periodic(std::size_t duration, std::uint64_t seed);
  /// Flash events are drawn as a Poisson process over the trace using `seed`.
  static LoadPattern flashcrowd(std::size_t duration, std::uint64_t seed);
  /// Periodic process with zero amplitude.
  static LoadPattern constant(double rate, std::size_t duration, std::uint64_t seed);

  std::string_view name() const;
  void validate() const;
};

std::vector<double> draw_flash_events(std::size_t duration, double events_per_hour, std::uint64_t seed);

/// Periodic: base + amplitude * sin(2 pi t / period). Flash crowd: base rate,
/// lifted during each event by a linear ramp to the peak, a plateau and a
/// linear decay; overlapping events combine by pointwise maximum.
double arrival_rate(const LoadPattern& pattern, double t);

/// Birth-death simulation at one-second resolution starting from an empty
/// system. Arrivals in second t are Poisson(rate / 60) with uniform offsets;
/// lifetimes are exponential. Element t counts sessions alive at time t + 1.
std::vector<int> simulate_sessions(const LoadPattern& pattern);

// ---------------------------------------------------------------------------
// Testbed profiles

enum class ResponseShape { linear, saturating, inverse };

std::string_view to_string(ResponseShape s);
ResponseShape response_shape_from_string(std::string_view name);

struct ResponseCurve {
  double base = 0.0;
  double slope = 0.0;
  ResponseShape shape = ResponseShape::linear;
  double noise = 0.0;  // coefficient of variation of the multiplicative noise

  friend bool operator==(const ResponseCurve&, const ResponseCurve&) = default;
};

/// Noise-free response for `sessions` active sessions on a server of `capacity`:
/// linear base + slope*n, saturating base + slope*C*u/(1+u), inverse base/(1+slope*u)
/// with u = n/C.
double response(const ResponseCurve& curve, double sessions, double capacity);

struct ServiceMode {
  double mean = 0.0;
  double sd = 0.0;

  friend bool operator==(const ServiceMode&, const ServiceMode&) = default;
};

struct TestbedProfile {
  std::string id;
  std::uint64_t seed = 0;
  double capacity = 60.0;
  double steepness = 8.0;
  std::array<ResponseCurve, kNumFeatures> features{};
  ServiceMode fps_conforming{25.0, 1.0};
  ServiceMode fps_violated{12.0, 3.0};
  ServiceMode abs_conforming{30.0, 2.0};
  ServiceMode abs_violated{10.0, 3.0};

  void validate(const SloThresholds& thresholds = {}) const;

  nlohmann::json to_json() const;
  static TestbedProfile from_json(const nlohmann::json& j);

  friend bool operator==(const TestbedProfile&, const TestbedProfile&) = default;
};

/// Probability that a second served with `sessions` active sessions falls in
/// the degraded service mode: logistic(steepness * (sessions / capacity - 1)).
double violation_probability(const TestbedProfile& profile, double sessions);

TestbedProfile load_profile(const std::filesystem::path& path);
/// Profiles compiled in from the repository's profiles/ directory ("A", "B").
TestbedProfile builtin_profile(std::string_view id);
std::vector<std::string> builtin_profile_ids();

// ---------------------------------------------------------------------------
// Traces

struct TraceRow {
  double timestamp = 0.0;
  FeatureVector features;
  double fps = 0.0;
  double abs = 0.0;
  int sessions = 0;

  ServiceSample service() const { return {timestamp, fps, abs}; }

  friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

// One generated (or ingested) piece of a trace.
struct TraceSegment {
  std::string pattern;
  std::string profile_id;
  std::uint64_t pattern_seed = 0;
  std::uint64_t profile_seed = 0;
  std::size_t start = 0;  // first row index
  std::size_t length = 0;
  double capacity = 0.0;  // 0 when unknown

  friend bool operator==(const TraceSegment&, const TraceSegment&) = default;
};

struct TraceMetadata {
  std::vector<TraceSegment> segments;

  std::size_t duration() const;
  /// Row indices where a new segment starts (excluding 0).
  std::vector<std::size_t> boundaries() const;

  friend bool operator==(const TraceMetadata&, const TraceMetadata&) = default;
};

struct Trace {
  TraceMetadata metadata;
  std::vector<TraceRow> rows;

  friend bool operator==(const Trace&, const Trace&) = default;
};

Trace synthesize_trace(const LoadPattern& pattern, const TestbedProfile& profile);

/// Synthesizes device and service metrics for a given active-session series.
/// The segment records pattern "sessions" and `noise_seed` as its pattern seed.
Trace synthesize_trace(std::span<const int> sessions, const TestbedProfile& profile, std::uint64_t noise_seed);

/// Appends traces in order, re-basing timestamps to continue one per second
/// from the first trace's start. Throws std::invalid_argument on an empty list.
Trace concat_traces(std::span<const Trace> traces);

std::vector<LabeledSample> label_trace(const Trace& trace, const SloThresholds& thresholds = {});

class TraceFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Header of the trace CSV: timestamp, the 21 feature columns, fps, abs, sessions.
std::vector<std::string> trace_columns();

std::filesystem::path metadata_path(const std::filesystem::path& csv_path);

/// Writes `path` (CSV) and its JSON sidecar. Numbers use shortest round-trip
/// formatting, so read_trace(write_trace(t)) == t.
void write_trace(const Trace& trace, const std::filesystem::path& path);

/// Reads a trace CSV, plus its sidecar when present. Columns may appear in any
/// order but must match the documented schema exactly.
Trace read_trace(const std::filesystem::path& path);

void write_trace_csv(const Trace& trace, std::ostream& out);
std::vector<TraceRow> parse_trace_csv(std::istream& in);

nlohmann::json metadata_to_json(const TraceMetadata& m);
TraceMetadata metadata_from_json(const nlohmann::json& j);

/// Parses durations such as "4h", "30m", "90s" or "3600".
std::size_t parse_duration(std::string_view text);

}  // namespace slapred
