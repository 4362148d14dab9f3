#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "slapred/core.hpp"
#include "slapred/evaluation.hpp"
#include "slapred/labeling.hpp"
#include "slapred/tracegen.hpp"

namespace slapred {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Protocol { holdout, cross_trace, prequential };

std::string_view to_string(Protocol p);
Protocol protocol_from_string(std::string_view name);

struct TraceSpec {
  enum class Kind { generated, file, concat };

  std::string name;
  Kind kind = Kind::generated;
  // generated
  std::string pattern = "periodic";
  std::string profile = "A";  // builtin id, or a path ending in .json
  std::optional<std::uint64_t> seed;  // derived from the global seed when absent
  std::size_t duration = 4 * 3600;
  // file
  std::filesystem::path path;
  // concat
  std::vector<std::string> parts;
};

struct MethodSpec {
  std::string name;
  Protocol protocol = Protocol::holdout;
  std::vector<std::string> traces;                            // holdout, prequential
  std::vector<std::pair<std::string, std::string>> pairs;     // cross_trace: (train, test)
  nlohmann::json params = nlohmann::json::object();
};

struct EvaluationSettings {
  double train_fraction = 0.7;
  PrequentialConfig prequential;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  SloThresholds slo;
  std::vector<TraceSpec> traces;
  std::vector<MethodSpec> methods;
  EvaluationSettings evaluation;

  /// Relative trace and profile paths resolve against `base_dir`.
  static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  nlohmann::json to_json() const;

  /// Throws ConfigError for an empty method list, unknown method or protocol
  /// names, method/protocol mismatches, bad parameters and unresolved traces.
  void validate() const;
};

ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// The built-in experiment matrix: three traces (periodic on profile A,
/// periodic on profile B, flash crowd on profile A), offline holdout and online
/// prequential runs on each, random-forest cross-trace runs over every ordered
/// pair, and OAUE on three concatenations. `quick` shortens traces to 30 minutes.
ExperimentConfig paper_suite_config(std::uint64_t seed = 1, bool quick = false);

struct RunOptions {
  std::filesystem::path out = "results";
  unsigned workers = 0;  // 0 = hardware concurrency
  std::size_t stride = 1;
};

struct RunRecord {
  std::string id;
  std::string method;
  Protocol protocol = Protocol::holdout;
  std::string train_trace;
  std::string test_trace;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  ConfusionMatrix confusion;
  MetricsReport metrics;
  std::string series_file;              // relative to the output directory; empty for holdout
  std::vector<std::size_t> boundaries;  // 1-based series indices of the first sample after each boundary
};

struct ExperimentOutcome {
  std::vector<RunRecord> runs;

  bool ok() const;
  std::vector<std::string> failed_runs() const;
};

/// Generates or loads every trace, writes them under <out>/traces, then runs
/// the method matrix on a bounded worker pool. Failed runs are recorded and the
/// remaining runs still complete; all tables cover the successful runs.
ExperimentOutcome run_experiment(const ExperimentConfig& config, const RunOptions& options);

/// Materializes the config's traces (in declaration order) without running methods.
std::vector<std::pair<std::string, Trace>> build_traces(const ExperimentConfig& config, unsigned workers = 0);

void write_metrics_csv(const std::vector<RunRecord>& runs, std::ostream& out);
void write_metrics_table(const std::vector<RunRecord>& runs, std::ostream& out);

}  // namespace slapred
