#include "slapred/tracegen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <numbers>
#include <ostream>
#include <queue>
#include <random>
#include <sstream>

#include "builtin_profiles.hpp"
#include "slapred/seed.hpp"

namespace slapred {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Load processes

LoadPattern LoadPattern::periodic(std::size_t duration, std::uint64_t seed) {
  LoadPattern p;
  p.shape = PeriodicLoad{};
  p.duration = duration;
  p.seed = seed;
  return p;
}

LoadPattern LoadPattern::flashcrowd(std::size_t duration, std::uint64_t seed) {
  FlashCrowdLoad f;
  f.event_starts = draw_flash_events(duration, f.events_per_hour, derive_seed(seed, "flash-events"));
  LoadPattern p;
  p.shape = std::move(f);
  p.duration = duration;
  p.seed = seed;
  return p;
}

LoadPattern LoadPattern::constant(double rate, std::size_t duration, std::uint64_t seed) {
  LoadPattern p;
  p.shape = PeriodicLoad{rate, 0.0, 3600.0};
  p.duration = duration;
  p.seed = seed;
  return p;
}

std::string_view LoadPattern::name() const {
  return std::holds_alternative<PeriodicLoad>(shape) ? "periodic" : "flashcrowd";
}

void LoadPattern::validate() const {
  if (!(holding_time_mean > 0.0)) throw std::invalid_argument("holding time mean must be > 0");
  if (const auto* p = std::get_if<PeriodicLoad>(&shape)) {
    if (!(p->base_rate > 0.0)) throw std::invalid_argument("base rate must be > 0");
    if (!(p->amplitude >= 0.0 && p->amplitude < p->base_rate)) {
      throw std::invalid_argument("amplitude must lie in [0, base rate)");
    }
    if (!(p->period > 0.0)) throw std::invalid_argument("period must be > 0");
    return;
  }
  const auto& f = std::get<FlashCrowdLoad>(shape);
  if (!(f.base_rate > 0.0 && f.events_per_hour > 0.0 && f.peak_rate > 0.0)) {
    throw std::invalid_argument("flash crowd rates must be > 0");
  }
  if (!(f.ramp_up >= 0.0 && f.sustain >= 0.0 && f.ramp_down >= 0.0)) {
    throw std::invalid_argument("flash crowd phase lengths must be >= 0");
  }
}

std::vector<double> draw_flash_events(std::size_t duration, double events_per_hour, std::uint64_t seed) {
  std::vector<double> starts;
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> gap(events_per_hour / 3600.0);
  for (double t = gap(rng); t < static_cast<double>(duration); t += gap(rng)) starts.push_back(t);
  return starts;
}

namespace {

double flash_event_rate(const FlashCrowdLoad& f, double dt) {
  if (dt < 0.0) return f.base_rate;
  if (dt < f.ramp_up) return f.base_rate + (f.peak_rate - f.base_rate) * dt / f.ramp_up;
  dt -= f.ramp_up;
  if (dt < f.sustain) return f.peak_rate;
  dt -= f.sustain;
  if (dt < f.ramp_down) return f.peak_rate - (f.peak_rate - f.base_rate) * dt / f.ramp_down;
  return f.base_rate;
}

}  // namespace

double arrival_rate(const LoadPattern& pattern, double t) {
  if (const auto* p = std::get_if<PeriodicLoad>(&pattern.shape)) {
    return p->base_rate + p->amplitude * std::sin(2.0 * std::numbers::pi * t / p->period);
  }
  const auto& f = std::get<FlashCrowdLoad>(pattern.shape);
  const double span = f.ramp_up + f.sustain + f.ramp_down;
  double rate = f.base_rate;
  // event_starts is sorted; only events starting in (t - span, t] contribute
  auto it = std::lower_bound(f.event_starts.begin(), f.event_starts.end(), t - span);
  for (; it != f.event_starts.end() && *it <= t; ++it) rate = std::max(rate, flash_event_rate(f, t - *it));
  return rate;
}

std::vector<int> simulate_sessions(const LoadPattern& pattern) {
  pattern.validate();
  std::mt19937_64 rng(derive_seed(pattern.seed, "sessions"));
  std::uniform_real_distribution<double> offset(0.0, 1.0);
  std::exponential_distribution<double> lifetime(1.0 / pattern.holding_time_mean);
  std::priority_queue<double, std::vector<double>, std::greater<>> departures;

  std::vector<int> sessions;
  sessions.reserve(pattern.duration);
  for (std::size_t t = 0; t < pattern.duration; ++t) {
    const double now = static_cast<double>(t);
    std::poisson_distribution<int> arrivals(arrival_rate(pattern, now) / 60.0);
    const int k = arrivals(rng);
    for (int i = 0; i < k; ++i) departures.push(now + offset(rng) + lifetime(rng));
    while (!departures.empty() && departures.top() <= now + 1.0) departures.pop();
    sessions.push_back(static_cast<int>(departures.size()));
  }
  return sessions;
}

// ---------------------------------------------------------------------------
// Profiles

std::string_view to_string(ResponseShape s) {
  switch (s) {
    case ResponseShape::linear: return "linear";
    case ResponseShape::saturating: return "saturating";
    case ResponseShape::inverse: return "inverse";
  }
  return "linear";
}

ResponseShape response_shape_from_string(std::string_view name) {
  if (name == "linear") return ResponseShape::linear;
  if (name == "saturating") return ResponseShape::saturating;
  if (name == "inverse") return ResponseShape::inverse;
  throw std::invalid_argument("unknown response shape: " + std::string(name));
}

double response(const ResponseCurve& curve, double sessions, double capacity) {
  const double u = sessions / capacity;
  switch (curve.shape) {
    case ResponseShape::linear: return curve.base + curve.slope * sessions;
    case ResponseShape::saturating: return curve.base + curve.slope * capacity * u / (1.0 + u);
    case ResponseShape::inverse: return curve.base / (1.0 + curve.slope * u);
  }
  return curve.base;
}

double violation_probability(const TestbedProfile& profile, double sessions) {
  const double z = profile.steepness * (sessions / profile.capacity - 1.0);
  return 1.0 / (1.0 + std::exp(-z));
}

void TestbedProfile::validate(const SloThresholds& thresholds) const {
  if (!(capacity > 0.0)) throw std::invalid_argument("profile capacity must be > 0");
  if (!(steepness > 0.0)) throw std::invalid_argument("profile steepness must be > 0");
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    const auto& c = features[i];
    if (!(c.noise >= 0.0) || !std::isfinite(c.base) || !std::isfinite(c.slope)) {
      throw std::invalid_argument("bad response curve for " + std::string(kFeatureNames[i]));
    }
  }
  for (const auto* m : {&fps_conforming, &fps_violated, &abs_conforming, &abs_violated}) {
    if (!(m->sd >= 0.0)) throw std::invalid_argument("service mode sd must be >= 0");
  }
  if (!(fps_conforming.mean > thresholds.fps_threshold && thresholds.fps_threshold > fps_violated.mean)) {
    throw std::invalid_argument("fps modes must straddle the fps threshold");
  }
}

namespace {

json mode_to_json(const ServiceMode& m) { return {{"mean", m.mean}, {"sd", m.sd}}; }

ServiceMode mode_from_json(const json& j) { return {j.at("mean").get<double>(), j.at("sd").get<double>()}; }

}  // namespace

json TestbedProfile::to_json() const {
  json feats = json::object();
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    const auto& c = features[i];
    feats[std::string(kFeatureNames[i])] = {
        {"shape", to_string(c.shape)}, {"base", c.base}, {"slope", c.slope}, {"noise", c.noise}};
  }
  return {{"id", id},
          {"seed", seed},
          {"capacity", capacity},
          {"steepness", steepness},
          {"fps", {{"conforming", mode_to_json(fps_conforming)}, {"violated", mode_to_json(fps_violated)}}},
          {"abs", {{"conforming", mode_to_json(abs_conforming)}, {"violated", mode_to_json(abs_violated)}}},
          {"features", feats}};
}

TestbedProfile TestbedProfile::from_json(const json& j) {
  TestbedProfile p;
  p.id = j.at("id").get<std::string>();
  p.seed = j.value("seed", std::uint64_t{0});
  p.capacity = j.value("capacity", p.capacity);
  p.steepness = j.value("steepness", p.steepness);
  if (j.contains("fps")) {
    p.fps_conforming = mode_from_json(j["fps"].at("conforming"));
    p.fps_violated = mode_from_json(j["fps"].at("violated"));
  }
  if (j.contains("abs")) {
    p.abs_conforming = mode_from_json(j["abs"].at("conforming"));
    p.abs_violated = mode_from_json(j["abs"].at("violated"));
  }
  const auto& feats = j.at("features");
  for (const auto& [name, _] : feats.items()) {
    if (!feature_index(name)) throw std::invalid_argument("profile names unknown feature " + name);
  }
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    const std::string name(kFeatureNames[i]);
    if (!feats.contains(name)) throw std::invalid_argument("profile lacks feature " + name);
    const auto& f = feats[name];
    p.features[i] = {f.at("base").get<double>(), f.at("slope").get<double>(),
                     response_shape_from_string(f.at("shape").get<std::string>()), f.value("noise", 0.0)};
  }
  p.validate();
  return p;
}

TestbedProfile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open profile " + path.string());
  try {
    return TestbedProfile::from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw std::invalid_argument("bad profile " + path.string() + ": " + e.what());
  }
}

TestbedProfile builtin_profile(std::string_view id) {
  for (const auto& [name, text] : kBuiltinProfiles) {
    if (name == id) return TestbedProfile::from_json(json::parse(text));
  }
  throw std::invalid_argument("unknown builtin profile: " + std::string(id));
}

std::vector<std::string> builtin_profile_ids() {
  std::vector<std::string> ids;
  for (const auto& entry : kBuiltinProfiles) ids.emplace_back(entry.first);
  return ids;
}

// ---------------------------------------------------------------------------
// Traces

std::size_t TraceMetadata::duration() const {
  std::size_t n = 0;
  for (const auto& s : segments) n += s.length;
  return n;
}

std::vector<std::size_t> TraceMetadata::boundaries() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 1; i < segments.size(); ++i) out.push_back(segments[i].start);
  return out;
}

namespace {

Trace synthesize_rows(std::span<const int> sessions, const TestbedProfile& profile, std::uint64_t noise_seed,
                      TraceSegment segment) {
  profile.validate();
  std::mt19937_64 rng(derive_seed(derive_seed(noise_seed, "device-noise"), profile.seed));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  std::array<double, kNumFeatures> sigma{};
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    const double cv = profile.features[i].noise;
    sigma[i] = std::sqrt(std::log1p(cv * cv));
  }

  Trace trace;
  segment.length = sessions.size();
  trace.metadata.segments.push_back(std::move(segment));
  trace.rows.reserve(sessions.size());
  for (std::size_t t = 0; t < sessions.size(); ++t) {
    TraceRow row;
    row.timestamp = static_cast<double>(t);
    row.sessions = sessions[t];
    const double n = sessions[t];
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
      // mean-one lognormal factor
      const double factor = std::exp(sigma[i] * normal(rng) - 0.5 * sigma[i] * sigma[i]);
      double v = response(profile.features[i], n, profile.capacity) * factor;
      v = std::max(v, 0.0);
      if (is_percent_feature(i)) v = std::min(v, 100.0);
      row.features[i] = v;
    }
    const bool degraded = uniform(rng) < violation_probability(profile, n);
    const ServiceMode& fps = degraded ? profile.fps_violated : profile.fps_conforming;
    const ServiceMode& abs = degraded ? profile.abs_violated : profile.abs_conforming;
    row.fps = std::max(0.0, fps.mean + fps.sd * normal(rng));
    row.abs = std::max(0.0, abs.mean + abs.sd * normal(rng));
    trace.rows.push_back(row);
  }
  return trace;
}

}  // namespace

Trace synthesize_trace(const LoadPattern& pattern, const TestbedProfile& profile) {
  const std::vector<int> sessions = simulate_sessions(pattern);
  return synthesize_rows(sessions, profile, pattern.seed,
                         {std::string(pattern.name()), profile.id, pattern.seed, profile.seed, 0, 0, profile.capacity});
}

Trace synthesize_trace(std::span<const int> sessions, const TestbedProfile& profile, std::uint64_t noise_seed) {
  for (int n : sessions) {
    if (n < 0) throw std::invalid_argument("session counts must be >= 0");
  }
  return synthesize_rows(sessions, profile, noise_seed,
                         {"sessions", profile.id, noise_seed, profile.seed, 0, 0, profile.capacity});
}

Trace concat_traces(std::span<const Trace> traces) {
  if (traces.empty()) throw std::invalid_argument("cannot concatenate an empty list of traces");
  Trace out;
  const double t0 = traces.front().rows.empty() ? 0.0 : traces.front().rows.front().timestamp;
  for (const auto& tr : traces) {
    const std::size_t offset = out.rows.size();
    for (auto seg : tr.metadata.segments) {
      seg.start += offset;
      out.metadata.segments.push_back(std::move(seg));
    }
    for (auto row : tr.rows) {
      row.timestamp = t0 + static_cast<double>(out.rows.size());
      out.rows.push_back(row);
    }
  }
  return out;
}

std::vector<LabeledSample> label_trace(const Trace& trace, const SloThresholds& thresholds) {
  thresholds.validate();
  std::vector<LabeledSample> out;
  out.reserve(trace.rows.size());
  for (const auto& row : trace.rows) {
    out.push_back({row.timestamp, row.features, evaluate_sla(row.service(), thresholds)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trace files

std::vector<std::string> trace_columns() {
  std::vector<std::string> cols{"timestamp"};
  for (auto name : kFeatureNames) cols.emplace_back(name);
  cols.insert(cols.end(), {"fps", "abs", "sessions"});
  return cols;
}

std::filesystem::path metadata_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p.replace_extension(".meta.json");
  return p;
}

namespace {

void put_number(std::ostream& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, res.ptr - buf);
}

std::string joined_schema() {
  std::string s;
  for (const auto& c : trace_columns()) s += (s.empty() ? "" : ",") + c;
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t begin = 0;
  while (true) {
    const auto comma = line.find(',', begin);
    out.push_back(line.substr(begin, comma - begin));
    if (comma == std::string_view::npos) break;
    begin = comma + 1;
  }
  return out;
}

double parse_double(std::string_view field, std::size_t line_no, std::string_view column) {
  double v = 0.0;
  const auto* end = field.data() + field.size();
  const auto res = std::from_chars(field.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw TraceFormatError("line " + std::to_string(line_no) + ": bad number '" + std::string(field) +
                           "' in column " + std::string(column));
  }
  return v;
}

}  // namespace

void write_trace_csv(const Trace& trace, std::ostream& out) {
  out << joined_schema() << '\n';
  for (const auto& row : trace.rows) {
    put_number(out, row.timestamp);
    for (double v : row.features.values) {
      out << ',';
      put_number(out, v);
    }
    out << ',';
    put_number(out, row.fps);
    out << ',';
    put_number(out, row.abs);
    out << ',' << row.sessions << '\n';
  }
}

std::vector<TraceRow> parse_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw TraceFormatError("line 1: missing header; expected " + joined_schema());
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto expected = trace_columns();
  const auto header = split_fields(line);
  // slot[c] = expected-column index for file column c
  std::vector<std::size_t> slot(header.size());
  std::vector<bool> seen(expected.size(), false);
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto it = std::find(expected.begin(), expected.end(), header[c]);
    if (it == expected.end()) {
      throw TraceFormatError("line 1: unknown column '" + std::string(header[c]) + "'; expected " + joined_schema());
    }
    const auto k = static_cast<std::size_t>(it - expected.begin());
    if (seen[k]) throw TraceFormatError("line 1: duplicate column '" + expected[k] + "'");
    seen[k] = true;
    slot[c] = k;
  }
  for (std::size_t k = 0; k < expected.size(); ++k) {
    if (!seen[k]) {
      throw TraceFormatError("line 1: missing column '" + expected[k] + "'; expected " + joined_schema());
    }
  }

  std::vector<TraceRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw TraceFormatError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                             " fields, found " + std::to_string(fields.size()));
    }
    TraceRow row;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const std::size_t k = slot[c];
      const double v = parse_double(fields[c], line_no, expected[k]);
      if (k == 0) {
        row.timestamp = v;
      } else if (k <= kNumFeatures) {
        row.features[k - 1] = v;
      } else if (k == kNumFeatures + 1) {
        row.fps = v;
      } else if (k == kNumFeatures + 2) {
        row.abs = v;
      } else {
        if (v < 0.0 || v != std::floor(v)) {
          throw TraceFormatError("line " + std::to_string(line_no) + ": sessions must be a non-negative integer");
        }
        row.sessions = static_cast<int>(v);
      }
    }
    if (!row.features.valid() || !row.service().valid()) {
      throw TraceFormatError("line " + std::to_string(line_no) + ": value outside its column's domain");
    }
    if (!rows.empty() && row.timestamp != rows.back().timestamp + 1.0) {
      throw TraceFormatError("line " + std::to_string(line_no) + ": timestamps must advance by one second");
    }
    rows.push_back(row);
  }
  return rows;
}

json metadata_to_json(const TraceMetadata& m) {
  json segs = json::array();
  for (const auto& s : m.segments) {
    segs.push_back({{"pattern", s.pattern},
                    {"profile", s.profile_id},
                    {"pattern_seed", s.pattern_seed},
                    {"profile_seed", s.profile_seed},
                    {"start", s.start},
                    {"length", s.length},
                    {"capacity", s.capacity}});
  }
  return {{"format", "slapred-trace"},
          {"version", 1},
          {"duration", m.duration()},
          {"boundaries", m.boundaries()},
          {"segments", segs}};
}

TraceMetadata metadata_from_json(const json& j) {
  TraceMetadata m;
  for (const auto& s : j.at("segments")) {
    m.segments.push_back({s.at("pattern").get<std::string>(), s.at("profile").get<std::string>(),
                          s.at("pattern_seed").get<std::uint64_t>(), s.at("profile_seed").get<std::uint64_t>(),
                          s.at("start").get<std::size_t>(), s.at("length").get<std::size_t>(),
                          s.at("capacity").get<double>()});
  }
  return m;
}

void write_trace(const Trace& trace, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_trace_csv(trace, out);
  }
  std::ofstream meta(metadata_path(path), std::ios::binary);
  if (!meta) throw std::runtime_error("cannot write " + metadata_path(path).string());
  meta << metadata_to_json(trace.metadata).dump(2) << '\n';
}

Trace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open trace " + path.string());
  Trace trace;
  try {
    trace.rows = parse_trace_csv(in);
  } catch (const TraceFormatError& e) {
    throw TraceFormatError(path.string() + ": " + e.what());
  }
  const auto meta = metadata_path(path);
  if (std::filesystem::exists(meta)) {
    std::ifstream min(meta);
    try {
      trace.metadata = metadata_from_json(json::parse(min));
    } catch (const json::exception& e) {
      throw TraceFormatError(meta.string() + ": " + e.what());
    }
    if (trace.metadata.duration() != trace.rows.size()) {
      throw TraceFormatError(meta.string() + ": duration does not match " + path.string());
    }
  } else {
    trace.metadata.segments.push_back({"external", path.stem().string(), 0, 0, 0, trace.rows.size(), 0.0});
  }
  return trace;
}

std::size_t parse_duration(std::string_view text) {
  if (text.empty()) throw std::invalid_argument("empty duration");
  std::size_t scale = 1;
  switch (text.back()) {
    case 'h': scale = 3600; text.remove_suffix(1); break;
    case 'm': scale = 60; text.remove_suffix(1); break;
    case 's': text.remove_suffix(1); break;
    default: break;
  }
  std::size_t value = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw std::invalid_argument("bad duration: " + std::string(text));
  }
  return value * scale;
}

}  // namespace slapred
