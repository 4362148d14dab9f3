#include "slapred/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "slapred/learners/offline.hpp"
#include "slapred/learners/online.hpp"
#include "slapred/seed.hpp"

namespace slapred {

using nlohmann::json;

std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::holdout: return "holdout";
    case Protocol::cross_trace: return "cross_trace";
    case Protocol::prequential: return "prequential";
  }
  return "holdout";
}

Protocol protocol_from_string(std::string_view name) {
  if (name == "holdout") return Protocol::holdout;
  if (name == "cross_trace") return Protocol::cross_trace;
  if (name == "prequential") return Protocol::prequential;
  throw ConfigError("unknown protocol: " + std::string(name));
}

namespace {

bool is_online(std::string_view method) {
  return method == "sgd_logistic" || method == "hoeffding_tree" || method == "oaue";
}

bool is_offline(std::string_view method) {
  return method == "logistic" || method == "cart" || method == "random_forest";
}

// Reads recognised keys from a params object and rejects the rest.
class ParamReader {
 public:
  ParamReader(const json& params, std::string context) : params_(params), context_(std::move(context)) {
    if (!params_.is_object()) throw ConfigError(context_ + ": params must be an object");
  }

  template <typename T>
  void read(const char* key, T& field) {
    used_.insert(key);
    if (!params_.contains(key)) return;
    try {
      field = params_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(context_ + ": bad value for parameter " + key);
    }
  }

  void read_leaf_predictor(LeafPredictor& field) {
    std::string name(to_string(field));
    read("leaf_predictor", name);
    try {
      field = leaf_predictor_from_string(name);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(context_ + ": " + e.what());
    }
  }

  void finish() const {
    for (const auto& [key, _] : params_.items()) {
      if (!used_.count(key)) throw ConfigError(context_ + ": unknown parameter " + key);
    }
  }

 private:
  const json& params_;
  std::string context_;
  std::set<std::string> used_;
};

void read_tree_params(ParamReader& r, HoeffdingTreeConfig& c) {
  r.read("grace_period", c.grace_period);
  r.read("split_confidence", c.split_confidence);
  r.read("tie_threshold", c.tie_threshold);
  r.read_leaf_predictor(c.leaf_predictor);
  r.read("numeric_bins", c.numeric_bins);
}

OnlineConfig online_config(const MethodSpec& m) {
  OnlineConfig c;
  ParamReader r(m.params, m.name);
  if (m.name == "sgd_logistic") {
    r.read("learning_rate", c.sgd.learning_rate);
    r.read("iterations_per_chunk", c.sgd.iterations_per_chunk);
    r.read("standardize", c.sgd.standardize);
    r.finish();
    c.sgd.validate();
  } else if (m.name == "hoeffding_tree") {
    read_tree_params(r, c.tree);
    r.finish();
    c.tree.validate();
  } else {
    r.read("max_members", c.oaue.max_members);
    r.read("block_size", c.oaue.block_size);
    r.read("weight_epsilon", c.oaue.weight_epsilon);
    read_tree_params(r, c.oaue.base_learner);
    r.finish();
    c.oaue.validate();
  }
  return c;
}

OfflineConfig offline_config(const MethodSpec& m) {
  OfflineConfig c;
  ParamReader r(m.params, m.name);
  if (m.name == "logistic") {
    r.read("max_iterations", c.logistic.max_iterations);
    r.read("relative_tolerance", c.logistic.relative_tolerance);
    r.read("initial_step", c.logistic.initial_step);
  } else if (m.name == "cart") {
    r.read("min_split", c.cart.min_split);
    r.read("features_per_split", c.cart.features_per_split);
  } else {
    r.read("trees", c.forest.trees);
    r.read("features_per_split", c.forest.features_per_split);
    r.read("bootstrap", c.forest.bootstrap);
    r.read("min_split", c.forest.min_split);
  }
  r.finish();
  return c;
}

bool valid_trace_name(const std::string& name) {
  if (name.empty()) return false;
  return std::all_of(name.begin(), name.end(), [](char ch) {
    return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '+' || ch == '.';
  });
}

json slo_to_json(const SloThresholds& s) {
  return {{"fps_threshold", s.fps_threshold}, {"abs_threshold", s.abs_threshold}, {"use_abs", s.use_abs}};
}

template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

ExperimentConfig ExperimentConfig::from_json(const json& j, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    if (j.contains("slo")) {
      const auto& s = j["slo"];
      c.slo.fps_threshold = s.value("fps_threshold", c.slo.fps_threshold);
      c.slo.abs_threshold = s.value("abs_threshold", c.slo.abs_threshold);
      c.slo.use_abs = s.value("use_abs", c.slo.use_abs);
    }
    if (j.contains("evaluation")) {
      const auto& e = j["evaluation"];
      c.evaluation.train_fraction = e.value("train_fraction", c.evaluation.train_fraction);
      c.evaluation.prequential.chunk_size = e.value("chunk_size", c.evaluation.prequential.chunk_size);
      c.evaluation.prequential.bootstrap_size = e.value("bootstrap_size", c.evaluation.prequential.bootstrap_size);
      c.evaluation.prequential.sliding_windows =
          e.value("sliding_windows", c.evaluation.prequential.sliding_windows);
    }
    for (const auto& t : j.value("traces", json::array())) {
      TraceSpec spec;
      spec.name = t.at("name").get<std::string>();
      if (t.contains("concat")) {
        spec.kind = TraceSpec::Kind::concat;
        spec.parts = t["concat"].get<std::vector<std::string>>();
      } else if (t.contains("file")) {
        spec.kind = TraceSpec::Kind::file;
        spec.path = t["file"].get<std::string>();
        if (spec.path.is_relative() && !base_dir.empty()) spec.path = base_dir / spec.path;
      } else {
        spec.pattern = t.value("pattern", spec.pattern);
        spec.profile = t.value("profile", spec.profile);
        if (spec.profile.ends_with(".json") && std::filesystem::path(spec.profile).is_relative() &&
            !base_dir.empty()) {
          spec.profile = (base_dir / spec.profile).string();
        }
        if (t.contains("seed")) spec.seed = t["seed"].get<std::uint64_t>();
        if (t.contains("duration")) {
          const auto& d = t["duration"];
          spec.duration = d.is_string() ? parse_duration(d.get<std::string>()) : d.get<std::size_t>();
        }
      }
      c.traces.push_back(std::move(spec));
    }
    for (const auto& m : j.value("methods", json::array())) {
      MethodSpec spec;
      spec.name = m.at("name").get<std::string>();
      spec.protocol = protocol_from_string(m.at("protocol").get<std::string>());
      spec.traces = m.value("traces", std::vector<std::string>{});
      for (const auto& p : m.value("pairs", json::array())) {
        spec.pairs.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
      }
      spec.params = m.value("params", json::object());
      c.methods.push_back(std::move(spec));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed experiment config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("malformed experiment config: ") + e.what());
  }
  return c;
}

json ExperimentConfig::to_json() const {
  json traces_j = json::array();
  for (const auto& t : traces) {
    json tj = {{"name", t.name}};
    switch (t.kind) {
      case TraceSpec::Kind::generated:
        tj["pattern"] = t.pattern;
        tj["profile"] = t.profile;
        tj["duration"] = t.duration;
        if (t.seed) tj["seed"] = *t.seed;
        break;
      case TraceSpec::Kind::file: tj["file"] = t.path.string(); break;
      case TraceSpec::Kind::concat: tj["concat"] = t.parts; break;
    }
    traces_j.push_back(std::move(tj));
  }
  json methods_j = json::array();
  for (const auto& m : methods) {
    json mj = {{"name", m.name}, {"protocol", to_string(m.protocol)}};
    if (!m.traces.empty()) mj["traces"] = m.traces;
    if (!m.pairs.empty()) {
      json pairs = json::array();
      for (const auto& [a, b] : m.pairs) pairs.push_back({a, b});
      mj["pairs"] = pairs;
    }
    if (!m.params.empty()) mj["params"] = m.params;
    methods_j.push_back(std::move(mj));
  }
  return {{"seed", seed},
          {"slo", slo_to_json(slo)},
          {"evaluation",
           {{"train_fraction", evaluation.train_fraction},
            {"chunk_size", evaluation.prequential.chunk_size},
            {"bootstrap_size", evaluation.prequential.bootstrap_size},
            {"sliding_windows", evaluation.prequential.sliding_windows}}},
          {"traces", traces_j},
          {"methods", methods_j}};
}

void ExperimentConfig::validate() const {
  if (methods.empty()) throw ConfigError("experiment config lists no methods");
  try {
    slo.validate();
    evaluation.prequential.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(evaluation.train_fraction > 0.0 && evaluation.train_fraction < 1.0)) {
    throw ConfigError("train_fraction must lie in (0, 1)");
  }

  std::set<std::string> defined;
  for (const auto& t : traces) {
    if (!valid_trace_name(t.name)) throw ConfigError("invalid trace name '" + t.name + "'");
    if (defined.count(t.name)) throw ConfigError("duplicate trace name " + t.name);
    switch (t.kind) {
      case TraceSpec::Kind::generated:
        if (t.pattern != "periodic" && t.pattern != "flashcrowd") {
          throw ConfigError("trace " + t.name + ": unknown pattern " + t.pattern);
        }
        if (t.profile.ends_with(".json")) {
          if (!std::filesystem::exists(t.profile)) {
            throw ConfigError("trace " + t.name + ": profile file not found: " + t.profile);
          }
        } else {
          const auto ids = builtin_profile_ids();
          if (std::find(ids.begin(), ids.end(), t.profile) == ids.end()) {
            throw ConfigError("trace " + t.name + ": unknown profile " + t.profile);
          }
        }
        if (t.duration == 0) throw ConfigError("trace " + t.name + ": duration must be > 0");
        break;
      case TraceSpec::Kind::file:
        if (!std::filesystem::exists(t.path)) {
          throw ConfigError("trace " + t.name + ": file not found: " + t.path.string());
        }
        break;
      case TraceSpec::Kind::concat:
        if (t.parts.empty()) throw ConfigError("trace " + t.name + ": concat needs at least one part");
        for (const auto& p : t.parts) {
          // parts must be declared earlier, which also rules out cycles
          if (!defined.count(p)) throw ConfigError("trace " + t.name + ": unknown or later-declared part " + p);
        }
        break;
    }
    defined.insert(t.name);
  }

  const auto require_trace = [&](const MethodSpec& m, const std::string& name) {
    if (!defined.count(name)) throw ConfigError("method " + m.name + ": unknown trace " + name);
  };
  for (const auto& m : methods) {
    if (!is_online(m.name) && !is_offline(m.name)) throw ConfigError("unknown method: " + m.name);
    if (m.protocol == Protocol::prequential && !is_online(m.name)) {
      throw ConfigError("method " + m.name + " cannot run prequentially (not an online learner)");
    }
    if (m.protocol != Protocol::prequential && !is_offline(m.name)) {
      throw ConfigError("method " + m.name + " supports only the prequential protocol");
    }
    if (m.protocol == Protocol::cross_trace) {
      if (m.pairs.empty()) throw ConfigError("method " + m.name + ": cross_trace needs trace pairs");
      for (const auto& [a, b] : m.pairs) {
        require_trace(m, a);
        require_trace(m, b);
      }
    } else {
      if (m.traces.empty()) throw ConfigError("method " + m.name + ": no traces listed");
      for (const auto& t : m.traces) require_trace(m, t);
    }
    if (is_online(m.name)) {
      try {
        online_config(m);
      } catch (const ConfigError&) {
        throw;
      } catch (const std::invalid_argument& e) {
        throw ConfigError(m.name + ": " + e.what());
      }
    } else {
      offline_config(m);
    }
  }
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return ExperimentConfig::from_json(j, path.parent_path());
}

ExperimentConfig paper_suite_config(std::uint64_t seed, bool quick) {
  ExperimentConfig c;
  c.seed = seed;
  const std::size_t five_hours = quick ? 1800 : 5 * 3600;
  const std::size_t four_hours = quick ? 1800 : 4 * 3600;

  const auto generated = [](std::string name, std::string pattern, std::string profile, std::size_t duration) {
    TraceSpec t;
    t.name = std::move(name);
    t.pattern = std::move(pattern);
    t.profile = std::move(profile);
    t.duration = duration;
    return t;
  };
  const auto concat = [](std::string name, std::vector<std::string> parts) {
    TraceSpec t;
    t.name = std::move(name);
    t.kind = TraceSpec::Kind::concat;
    t.parts = std::move(parts);
    return t;
  };
  c.traces = {generated("periodic_t1", "periodic", "A", five_hours),
              generated("periodic_t2", "periodic", "B", four_hours),
              generated("flashcrowd", "flashcrowd", "A", five_hours),
              concat("periodic_t1+periodic_t2", {"periodic_t1", "periodic_t2"}),
              concat("periodic_t2+periodic_t1", {"periodic_t2", "periodic_t1"}),
              concat("flashcrowd+periodic_t2", {"flashcrowd", "periodic_t2"})};

  const std::vector<std::string> base{"periodic_t1", "periodic_t2", "flashcrowd"};
  for (const char* m : {"logistic", "cart", "random_forest"}) {
    c.methods.push_back({m, Protocol::holdout, base, {}, json::object()});
  }
  for (const char* m : {"sgd_logistic", "hoeffding_tree", "oaue"}) {
    c.methods.push_back({m, Protocol::prequential, base, {}, json::object()});
  }
  MethodSpec cross{"random_forest", Protocol::cross_trace, {}, {}, json::object()};
  for (const auto& a : base) {
    for (const auto& b : base) {
      if (a != b) cross.pairs.emplace_back(a, b);
    }
  }
  c.methods.push_back(cross);
  c.methods.push_back({"oaue",
                       Protocol::prequential,
                       {"periodic_t1+periodic_t2", "periodic_t2+periodic_t1", "flashcrowd+periodic_t2"},
                       {},
                       json::object()});
  return c;
}

// ---------------------------------------------------------------------------
// Running

bool ExperimentOutcome::ok() const {
  return std::all_of(runs.begin(), runs.end(), [](const RunRecord& r) { return r.ok; });
}

std::vector<std::string> ExperimentOutcome::failed_runs() const {
  std::vector<std::string> ids;
  for (const auto& r : runs) {
    if (!r.ok) ids.push_back(r.id);
  }
  return ids;
}

std::vector<std::pair<std::string, Trace>> build_traces(const ExperimentConfig& config, unsigned workers) {
  std::vector<std::pair<std::string, Trace>> built(config.traces.size());
  std::vector<std::string> errors(config.traces.size());

  // Leaf traces are independent; concatenations only reference earlier entries.
  parallel_for(config.traces.size(), workers, [&](std::size_t i) {
    const auto& spec = config.traces[i];
    built[i].first = spec.name;
    try {
      if (spec.kind == TraceSpec::Kind::generated) {
        const std::uint64_t seed = spec.seed ? *spec.seed : derive_seed(config.seed, "trace:" + spec.name);
        const auto pattern = spec.pattern == "flashcrowd" ? LoadPattern::flashcrowd(spec.duration, seed)
                                                          : LoadPattern::periodic(spec.duration, seed);
        const auto profile =
            spec.profile.ends_with(".json") ? load_profile(spec.profile) : builtin_profile(spec.profile);
        built[i].second = synthesize_trace(pattern, profile);
      } else if (spec.kind == TraceSpec::Kind::file) {
        built[i].second = read_trace(spec.path);
      }
    } catch (const std::exception& e) {
      errors[i] = "trace " + spec.name + ": " + e.what();
    }
  });
  for (const auto& e : errors) {
    if (!e.empty()) throw std::runtime_error(e);
  }

  for (std::size_t i = 0; i < config.traces.size(); ++i) {
    const auto& spec = config.traces[i];
    if (spec.kind != TraceSpec::Kind::concat) continue;
    std::vector<Trace> parts;
    for (const auto& p : spec.parts) {
      const auto it = std::find_if(built.begin(), built.begin() + static_cast<std::ptrdiff_t>(i),
                                   [&](const auto& b) { return b.first == p; });
      parts.push_back(it->second);
    }
    built[i].second = concat_traces(parts);
  }
  return built;
}

namespace {

struct RunJob {
  RunRecord record;
  const MethodSpec* method = nullptr;
};

std::vector<RunJob> plan_runs(const ExperimentConfig& config) {
  std::vector<RunJob> jobs;
  for (const auto& m : config.methods) {
    const std::string prefix = m.name + "." + std::string(to_string(m.protocol)) + ".";
    if (m.protocol == Protocol::cross_trace) {
      for (const auto& [a, b] : m.pairs) {
        RunJob job;
        job.record.id = prefix + a + "__" + b;
        job.record.train_trace = a;
        job.record.test_trace = b;
        job.method = &m;
        jobs.push_back(std::move(job));
      }
    } else {
      for (const auto& t : m.traces) {
        RunJob job;
        job.record.id = prefix + t;
        job.record.train_trace = t;
        job.record.test_trace = t;
        job.method = &m;
        jobs.push_back(std::move(job));
      }
    }
  }
  for (auto& job : jobs) {
    job.record.method = job.method->name;
    job.record.protocol = job.method->protocol;
    job.record.seed = derive_seed(config.seed, job.record.id);
  }
  // Duplicate (method, protocol, trace) entries would overwrite each other's series.
  std::set<std::string> ids;
  for (auto& job : jobs) {
    std::string id = job.record.id;
    for (int k = 2; ids.count(id); ++k) id = job.record.id + "#" + std::to_string(k);
    job.record.id = id;
    ids.insert(id);
  }
  return jobs;
}

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string csv_metric(const std::optional<double>& v) { return v ? fmt6(*v) : "undefined"; }

}  // namespace

void write_metrics_csv(const std::vector<RunRecord>& runs, std::ostream& out) {
  out << "run_id,method,protocol,train_trace,test_trace,samples,tp,fp,tn,fn,ca,ba,tpr,tnr,far_as_printed,far_fpr\n";
  for (const auto& r : runs) {
    if (!r.ok) continue;
    const auto& m = r.metrics;
    out << r.id << ',' << r.method << ',' << to_string(r.protocol) << ',' << r.train_trace << ',' << r.test_trace
        << ',' << r.confusion.total() << ',' << r.confusion.tp << ',' << r.confusion.fp << ',' << r.confusion.tn
        << ',' << r.confusion.fn << ',' << fmt6(m.ca) << ',' << csv_metric(m.ba) << ',' << csv_metric(m.tpr) << ','
        << csv_metric(m.tnr) << ',' << csv_metric(m.far_as_printed) << ',' << csv_metric(m.far_fpr) << '\n';
  }
}

void write_metrics_table(const std::vector<RunRecord>& runs, std::ostream& out) {
  const std::vector<std::pair<Protocol, const char*>> sections{
      {Protocol::holdout, "Offline learning, in-trace holdout"},
      {Protocol::prequential, "Online learning, prequential"},
      {Protocol::cross_trace, "Offline learning, cross-trace"}};
  const std::vector<std::string> head{"Method", "Trace", "CA", "BA", "TPR", "TNR", "FAR", "FAR(fpr)"};

  bool first = true;
  for (const auto& [protocol, title] : sections) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : runs) {
      if (!r.ok || r.protocol != protocol) continue;
      const auto& m = r.metrics;
      const std::string trace = protocol == Protocol::cross_trace ? r.train_trace + " -> " + r.test_trace
                                                                  : r.test_trace;
      rows.push_back({r.method, trace, format_metric(m.ca), format_metric(m.ba), format_metric(m.tpr),
                      format_metric(m.tnr), format_metric(m.far_as_printed), format_metric(m.far_fpr)});
    }
    if (rows.empty()) continue;
    std::vector<std::size_t> width(head.size());
    for (std::size_t c = 0; c < head.size(); ++c) {
      width[c] = head[c].size();
      for (const auto& row : rows) width[c] = std::max(width[c], row[c].size());
    }
    const auto emit = [&](const std::vector<std::string>& row) {
      std::string line;
      for (std::size_t c = 0; c < row.size(); ++c) {
        const std::size_t pad = width[c] - row[c].size();
        // text columns left-aligned, numbers right-aligned
        line += c < 2 ? row[c] + std::string(pad, ' ') : std::string(pad, ' ') + row[c];
        if (c + 1 < row.size()) line += "  ";
      }
      while (!line.empty() && line.back() == ' ') line.pop_back();
      out << line << '\n';
    };
    if (!first) out << '\n';
    first = false;
    out << title << '\n';
    emit(head);
    std::size_t total = 2 * (head.size() - 1);
    for (auto w : width) total += w;
    out << std::string(total, '-') << '\n';
    for (const auto& row : rows) emit(row);
  }
}

ExperimentOutcome run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  namespace fs = std::filesystem;
  fs::create_directories(options.out / "series");
  fs::create_directories(options.out / "traces");

  const auto traces = build_traces(config, options.workers);
  std::map<std::string, const Trace*> by_name;
  std::map<std::string, std::vector<LabeledSample>> labeled;
  for (const auto& [name, trace] : traces) {
    by_name[name] = &trace;
    labeled[name] = label_trace(trace, config.slo);
  }
  parallel_for(traces.size(), options.workers, [&](std::size_t i) {
    write_trace(traces[i].second, options.out / "traces" / (traces[i].first + ".csv"));
  });

  auto jobs = plan_runs(config);
  const std::size_t stride = std::max<std::size_t>(1, options.stride);

  parallel_for(jobs.size(), options.workers, [&](std::size_t i) {
    RunRecord& r = jobs[i].record;
    const MethodSpec& m = *jobs[i].method;
    try {
      const auto& train = labeled.at(r.train_trace);
      const auto& test = labeled.at(r.test_trace);
      EvaluationResult result;
      std::size_t series_offset = 0;  // rows of the test trace not scored before the series starts
      switch (r.protocol) {
        case Protocol::holdout:
          result = holdout_evaluate(offline_method_from_string(m.name), train, config.evaluation.train_fraction,
                                    r.seed, offline_config(m));
          break;
        case Protocol::cross_trace:
          result = cross_trace_evaluate(offline_method_from_string(m.name), train, test, r.seed, offline_config(m),
                                        config.evaluation.prequential.sliding_windows);
          break;
        case Protocol::prequential: {
          auto clf = make_online_classifier(online_method_from_string(m.name), online_config(m));
          result = prequential_evaluate(*clf, test, config.evaluation.prequential);
          series_offset = config.evaluation.prequential.bootstrap_size;
          break;
        }
      }
      r.confusion = result.confusion;
      r.metrics = result.metrics;
      if (r.protocol != Protocol::holdout) {
        for (auto b : by_name.at(r.test_trace)->metadata.boundaries()) {
          if (b >= series_offset) r.boundaries.push_back(b - series_offset + 1);
        }
        r.series_file = "series/" + r.id + ".csv";
        std::ofstream out(options.out / r.series_file, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + r.series_file);
        write_series_csv(result.series, out, stride);
      }
      r.ok = true;
    } catch (const std::exception& e) {
      r.ok = false;
      r.error = e.what();
    }
  });

  ExperimentOutcome outcome;
  for (auto& job : jobs) outcome.runs.push_back(std::move(job.record));

  {
    std::ofstream csv(options.out / "metrics.csv", std::ios::binary);
    write_metrics_csv(outcome.runs, csv);
    std::ofstream txt(options.out / "metrics.txt", std::ios::binary);
    write_metrics_table(outcome.runs, txt);
  }

  json traces_j = json::object();
  for (const auto& [name, trace] : traces) {
    auto tj = metadata_to_json(trace.metadata);
    tj["file"] = "traces/" + name + ".csv";
    traces_j[name] = std::move(tj);
  }
  json runs_j = json::array();
  for (const auto& r : outcome.runs) {
    json rj = {{"id", r.id},
               {"method", r.method},
               {"protocol", to_string(r.protocol)},
               {"train_trace", r.train_trace},
               {"test_trace", r.test_trace},
               {"seed", r.seed},
               {"status", r.ok ? "ok" : "failed"}};
    if (!r.ok) rj["error"] = r.error;
    if (!r.series_file.empty()) {
      rj["series"] = r.series_file;
      rj["boundaries"] = r.boundaries;
    }
    runs_j.push_back(std::move(rj));
  }
  const json meta = {{"seed", config.seed},
                     {"stride", stride},
                     {"config", config.to_json()},
                     {"traces", traces_j},
                     {"runs", runs_j}};
  std::ofstream(options.out / "run-metadata.json", std::ios::binary) << meta.dump(2) << '\n';
  return outcome;
}

}  // namespace slapred
