#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "doctest.h"
#include "slapred/tracegen.hpp"

using namespace slapred;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("slapred-test-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

double violated_fraction(const std::vector<LabeledSample>& s) {
  double v = 0.0;
  for (const auto& x : s) v += x.label == SlaLabel::violated ? 1.0 : 0.0;
  return v / static_cast<double>(s.size());
}

}  // namespace

TEST_CASE("periodic arrival rate") {
  const auto p = LoadPattern::periodic(3600, 1);
  CHECK(arrival_rate(p, 0.0) == doctest::Approx(30.0));
  CHECK(arrival_rate(p, 900.0) == doctest::Approx(50.0));
  CHECK(arrival_rate(p, 2700.0) == doctest::Approx(10.0));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> t(0.0, 20000.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = t(rng);
    CHECK(arrival_rate(p, x) == doctest::Approx(arrival_rate(p, x + 3600.0)).epsilon(1e-9));
    CHECK(arrival_rate(p, x) > 0.0);
  }
}

TEST_CASE("flash crowd arrival rate") {
  LoadPattern p = LoadPattern::flashcrowd(3600, 1);
  auto& f = std::get<FlashCrowdLoad>(p.shape);
  f.event_starts = {100.0};
  CHECK(arrival_rate(p, 50.0) == 5.0);
  CHECK(arrival_rate(p, 130.0) == doctest::Approx(27.5));
  CHECK(arrival_rate(p, 160.0) == doctest::Approx(50.0));
  CHECK(arrival_rate(p, 219.0) == doctest::Approx(50.0));
  CHECK(arrival_rate(p, 340.0) == doctest::Approx(50.0 - 45.0 * 120.0 / 240.0));
  CHECK(arrival_rate(p, 460.0) == 5.0);

  // overlapping events combine by pointwise maximum
  f.event_starts = {100.0, 250.0};
  CHECK(arrival_rate(p, 280.0) == doctest::Approx(std::max(50.0 - 45.0 * 60.0 / 240.0, 5.0 + 45.0 * 30.0 / 60.0)));
  CHECK(arrival_rate(p, 320.0) == doctest::Approx(50.0));
}

TEST_CASE("flash events arrive at the configured rate") {
  const auto events = draw_flash_events(360000, 10.0, 4);
  CHECK(std::is_sorted(events.begin(), events.end()));
  CHECK(static_cast<double>(events.size()) == doctest::Approx(1000.0).epsilon(0.1));
  CHECK(events.back() < 360000.0);
}

TEST_CASE("pattern validation") {
  auto p = LoadPattern::periodic(10, 1);
  std::get<PeriodicLoad>(p.shape).amplitude = 30.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  auto q = LoadPattern::periodic(10, 1);
  q.holding_time_mean = 0.0;
  CHECK_THROWS_AS(q.validate(), std::invalid_argument);
}

TEST_CASE("session simulation") {
  CHECK(simulate_sessions(LoadPattern::periodic(0, 1)).empty());
  CHECK(simulate_sessions(LoadPattern::periodic(5000, 3)) == simulate_sessions(LoadPattern::periodic(5000, 3)));
  CHECK(simulate_sessions(LoadPattern::periodic(5000, 3)) != simulate_sessions(LoadPattern::periodic(5000, 4)));

  const auto n = simulate_sessions(LoadPattern::constant(30.0, 20000, 5));
  const double mean = std::accumulate(n.begin(), n.end(), 0.0) / static_cast<double>(n.size());
  CHECK(mean == doctest::Approx(30.0).epsilon(0.05));
  CHECK(n.front() <= 5);  // starts from an empty system
}

TEST_CASE("builtin profiles") {
  const auto ids = builtin_profile_ids();
  CHECK(ids == std::vector<std::string>{"A", "B"});
  for (const auto& id : ids) {
    const auto p = builtin_profile(id);
    CHECK(p.id == id);
    CHECK_NOTHROW(p.validate());
    CHECK(TestbedProfile::from_json(nlohmann::json::parse(p.to_json().dump())) == p);
  }
  CHECK(builtin_profile("A").capacity == builtin_profile("B").capacity);
  CHECK(builtin_profile("A").features != builtin_profile("B").features);
  CHECK_THROWS_AS(builtin_profile("Z"), std::invalid_argument);
}

TEST_CASE("profile validation") {
  auto p = builtin_profile("A");
  p.fps_violated.mean = 21.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = builtin_profile("A");
  p.capacity = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = builtin_profile("A");
  p.features[3].noise = -0.1;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);

  auto j = builtin_profile("A").to_json();
  j["features"].erase("swap_used");
  CHECK_THROWS_AS(TestbedProfile::from_json(j), std::invalid_argument);
  j = builtin_profile("A").to_json();
  j["features"]["gpu_util"] = j["features"]["cpu_idle"];
  CHECK_THROWS_AS(TestbedProfile::from_json(j), std::invalid_argument);
}

TEST_CASE("response shapes") {
  const ResponseCurve lin{2.0, 0.5, ResponseShape::linear, 0.0};
  const ResponseCurve sat{1.0, 2.0, ResponseShape::saturating, 0.0};
  const ResponseCurve inv{90.0, 1.5, ResponseShape::inverse, 0.0};
  CHECK(response(lin, 10.0, 40.0) == doctest::Approx(7.0));
  CHECK(response(sat, 40.0, 40.0) == doctest::Approx(1.0 + 2.0 * 40.0 * 0.5));
  CHECK(response(inv, 40.0, 40.0) == doctest::Approx(36.0));
  CHECK(response(inv, 0.0, 40.0) == 90.0);
}

TEST_CASE("idle and saturated servers") {
  const auto profile = builtin_profile("A");
  const std::vector<int> idle(2000, 0);
  const auto quiet = synthesize_trace(idle, profile, 1);
  for (const auto& r : quiet.rows) {
    CHECK(r.fps == doctest::Approx(25.0).epsilon(0.25));
    CHECK(r.features.valid());
  }
  CHECK(violated_fraction(label_trace(quiet)) == 0.0);

  const std::vector<int> busy(2000, static_cast<int>(3 * profile.capacity));
  CHECK(violated_fraction(label_trace(synthesize_trace(busy, profile, 2))) > 0.99);
}

TEST_CASE("more sessions never mean fewer violations") {
  const auto profile = builtin_profile("A");
  const auto base = simulate_sessions(LoadPattern::periodic(3600, 1));
  std::vector<int> heavier(base);
  for (auto& n : heavier) n += 6;
  double light = 0.0, heavy = 0.0;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    light += violated_fraction(label_trace(synthesize_trace(base, profile, seed)));
    heavy += violated_fraction(label_trace(synthesize_trace(heavier, profile, seed)));
  }
  CHECK(heavy > light);
}

TEST_CASE("default periodic trace calibration") {
  const auto trace = synthesize_trace(LoadPattern::periodic(4 * 3600, 1), builtin_profile("A"));
  CHECK(trace.rows.size() == 4 * 3600);
  const double v = violated_fraction(label_trace(trace));
  CHECK(v >= 0.2);
  CHECK(v <= 0.5);

  // fps histogram: two modes with the antimode near the SLO threshold
  std::vector<int> hist(40, 0);
  for (const auto& r : trace.rows) hist[std::min<std::size_t>(39, static_cast<std::size_t>(r.fps))]++;
  const auto low_mode = std::max_element(hist.begin(), hist.begin() + 18) - hist.begin();
  const auto high_mode = std::max_element(hist.begin() + 22, hist.end()) - hist.begin();
  const auto antimode = std::min_element(hist.begin() + low_mode, hist.begin() + high_mode) - hist.begin();
  CHECK(low_mode < 18);
  CHECK(high_mode >= 22);
  CHECK(antimode >= 17);
  CHECK(antimode <= 21);
}

TEST_CASE("synthesis is deterministic per seeds") {
  const auto p = builtin_profile("B");
  const auto a = synthesize_trace(LoadPattern::flashcrowd(1800, 9), p);
  const auto b = synthesize_trace(LoadPattern::flashcrowd(1800, 9), p);
  const auto c = synthesize_trace(LoadPattern::flashcrowd(1800, 10), p);
  CHECK(a == b);
  CHECK(a != c);
  auto p2 = p;
  p2.seed += 1;
  CHECK(synthesize_trace(LoadPattern::flashcrowd(1800, 9), p2) != a);
  CHECK(a.metadata.segments.size() == 1);
  CHECK(a.metadata.segments[0].pattern == "flashcrowd");
  CHECK(a.metadata.segments[0].profile_id == "B");
}

TEST_CASE("concatenation") {
  const auto a = synthesize_trace(LoadPattern::periodic(3600, 1), builtin_profile("A"));
  const auto b = synthesize_trace(LoadPattern::periodic(3600, 2), builtin_profile("B"));
  CHECK(concat_traces(std::vector<Trace>{a}) == a);

  const auto ab = concat_traces(std::vector<Trace>{a, b});
  CHECK(ab.rows.size() == 7200);
  CHECK(ab.metadata.boundaries() == std::vector<std::size_t>{3600});
  for (std::size_t i = 0; i < ab.rows.size(); ++i) CHECK(ab.rows[i].timestamp == static_cast<double>(i));

  auto la = label_trace(a);
  const auto lb = label_trace(b);
  la.insert(la.end(), lb.begin(), lb.end());
  const auto lab = label_trace(ab);
  REQUIRE(lab.size() == la.size());
  for (std::size_t i = 0; i < lab.size(); ++i) {
    CHECK(lab[i].label == la[i].label);
    CHECK(lab[i].features == la[i].features);
  }

  const auto abc = concat_traces(std::vector<Trace>{ab, a});
  CHECK(abc.metadata.boundaries() == std::vector<std::size_t>{3600, 7200});
  CHECK_THROWS_AS(concat_traces(std::vector<Trace>{}), std::invalid_argument);
}

TEST_CASE("trace files round-trip exactly") {
  const auto dir = scratch_dir("roundtrip");
  const auto a = synthesize_trace(LoadPattern::flashcrowd(900, 3), builtin_profile("A"));
  const auto b = synthesize_trace(LoadPattern::periodic(600, 4), builtin_profile("B"));
  const auto ab = concat_traces(std::vector<Trace>{a, b});
  for (const auto* t : {&a, &ab}) {
    const auto path = dir / "t.csv";
    write_trace(*t, path);
    CHECK(fs::exists(metadata_path(path)));
    CHECK(read_trace(path) == *t);
  }
}

TEST_CASE("externally produced trace") {
  const auto t = read_trace(fs::path(FIXTURE_DIR) / "external_trace.csv");
  REQUIRE(t.rows.size() == 3);
  CHECK(t.rows[0].timestamp == 1000.0);
  CHECK(t.rows[1].features[Feature::cpu_idle] == 62.25);
  CHECK(t.rows[2].features[Feature::iface_util] == 30.2);
  CHECK(t.rows[2].fps == 11.4);
  CHECK(t.rows[2].sessions == 55);
  CHECK(t.metadata.duration() == 3);
  const auto labels = label_trace(t);
  CHECK(labels[0].label == SlaLabel::conforming);
  CHECK(labels[2].label == SlaLabel::violated);
}

TEST_CASE("malformed trace files") {
  const auto header = [] {
    std::string h;
    for (const auto& c : trace_columns()) h += (h.empty() ? "" : ",") + c;
    return h;
  }();
  const auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return parse_trace_csv(in);
  };
  std::string row = "0";
  for (std::size_t i = 0; i < kNumFeatures; ++i) row += ",1";
  row += ",25,30,3";

  CHECK(parse(header + "\n" + row + "\n").size() == 1);

  SUBCASE("missing feature column") {
    std::string h = header;
    h.erase(h.find(",swap_used"), std::string(",swap_used").size());
    CHECK_THROWS_WITH_AS(parse(h + "\n"), doctest::Contains("missing column 'swap_used'"), TraceFormatError);
  }
  SUBCASE("unknown column lists the schema") {
    CHECK_THROWS_WITH_AS(parse(header + ",gpu\n"), doctest::Contains("expected timestamp,cpu_idle"), TraceFormatError);
  }
  SUBCASE("bad number reports its line") {
    std::string bad = row;
    bad.replace(bad.find(",1,"), 3, ",x,");
    CHECK_THROWS_WITH_AS(parse(header + "\n" + row + "\n" + bad.replace(0, 1, "1") + "\n"),
                         doctest::Contains("line 3"), TraceFormatError);
  }
  SUBCASE("short row") {
    CHECK_THROWS_WITH_AS(parse(header + "\n0,1,2\n"), doctest::Contains("line 2"), TraceFormatError);
  }
  SUBCASE("out-of-domain value") {
    std::string bad = "0,150" + row.substr(row.find(",1,") + 2);
    CHECK_THROWS_WITH_AS(parse(header + "\n" + bad + "\n"), doctest::Contains("line 2"), TraceFormatError);
  }
  SUBCASE("timestamp gap") {
    std::string next = row;
    next.replace(0, 1, "5");
    CHECK_THROWS_WITH_AS(parse(header + "\n" + row + "\n" + next + "\n"), doctest::Contains("line 3"),
                         TraceFormatError);
  }
  SUBCASE("empty file") { CHECK_THROWS_AS(parse(""), TraceFormatError); }
}

TEST_CASE("columns may appear in any order") {
  auto cols = trace_columns();
  std::reverse(cols.begin(), cols.end());
  std::string h;
  for (const auto& c : cols) h += (h.empty() ? "" : ",") + c;
  std::string row = "7,30,25";  // sessions, abs, fps
  for (std::size_t i = 0; i < kNumFeatures; ++i) row += "," + std::to_string(i);
  row += ",42";  // timestamp
  std::istringstream in(h + "\n" + row + "\n");
  const auto rows = parse_trace_csv(in);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].timestamp == 42.0);
  CHECK(rows[0].sessions == 7);
  CHECK(rows[0].fps == 25.0);
  CHECK(rows[0].features[Feature::iface_util] == 0.0);
  CHECK(rows[0].features[Feature::cpu_idle] == 20.0);
}

TEST_CASE("duration parsing") {
  CHECK(parse_duration("4h") == 14400);
  CHECK(parse_duration("30m") == 1800);
  CHECK(parse_duration("90s") == 90);
  CHECK(parse_duration("3600") == 3600);
  CHECK_THROWS_AS(parse_duration("4x"), std::invalid_argument);
  CHECK_THROWS_AS(parse_duration(""), std::invalid_argument);
}
