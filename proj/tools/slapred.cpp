// Command-line front end: trace generation and experiment runs.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "slapred/experiment.hpp"
#include "slapred/tracegen.hpp"

namespace fs = std::filesystem;
using namespace slapred;

namespace {

int report(const ExperimentOutcome& outcome, const fs::path& out) {
  std::size_t ok = 0;
  for (const auto& r : outcome.runs) {
    if (r.ok) {
      ++ok;
    } else {
      std::cerr << "run " << r.id << " failed: " << r.error << '\n';
    }
  }
  std::cout << ok << "/" << outcome.runs.size() << " runs completed; results in " << out.string() << '\n';
  return outcome.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SLA violation prediction experiments"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Synthesize one load trace");
  std::string pattern = "periodic";
  std::uint64_t gen_seed = 1;
  std::string duration = "4h";
  std::string profile = "A";
  fs::path gen_out = ".";
  gen->add_option("--pattern", pattern, "Load pattern")->check(CLI::IsMember({"periodic", "flashcrowd"}));
  gen->add_option("--seed", gen_seed, "Pattern seed");
  gen->add_option("--duration", duration, "Trace length, e.g. 4h, 30m, 900s");
  gen->add_option("--profile", profile, "Builtin profile id (A, B) or path to a profile JSON file");
  gen->add_option("--out", gen_out, "Output directory");

  // run
  auto* run = app.add_subcommand("run", "Run an experiment config");
  fs::path config_path;
  RunOptions run_opts;
  std::optional<std::uint64_t> run_seed;
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--out", run_opts.out, "Output directory");
  run->add_option("--seed", run_seed, "Override the config's global seed");
  run->add_option("--workers", run_opts.workers, "Parallel runs (0 = all cores)");
  run->add_option("--stride", run_opts.stride, "Write every Nth point of accuracy series");

  // paper-suite
  auto* suite = app.add_subcommand("paper-suite", "Run the built-in experiment matrix");
  RunOptions suite_opts;
  std::uint64_t suite_seed = 1;
  bool quick = false;
  suite->add_option("--out", suite_opts.out, "Output directory");
  suite->add_option("--seed", suite_seed, "Global seed");
  suite->add_option("--workers", suite_opts.workers, "Parallel runs (0 = all cores)");
  suite->add_option("--stride", suite_opts.stride, "Write every Nth point of accuracy series");
  suite->add_flag("--quick", quick, "Use 30-minute traces");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const std::size_t seconds = parse_duration(duration);
      const auto load = pattern == "flashcrowd" ? LoadPattern::flashcrowd(seconds, gen_seed)
                                                : LoadPattern::periodic(seconds, gen_seed);
      const bool is_file = profile.ends_with(".json");
      const auto prof = is_file ? load_profile(profile) : builtin_profile(profile);
      const Trace trace = synthesize_trace(load, prof);
      const fs::path path = gen_out / (pattern + "-" + prof.id + "-seed" + std::to_string(gen_seed) + ".csv");
      write_trace(trace, path);
      std::cout << "wrote " << path.string() << " (" << trace.rows.size() << " rows) and "
                << metadata_path(path).string() << '\n';
      return 0;
    }
    if (*run) {
      auto config = load_experiment_config(config_path);
      if (run_seed) config.seed = *run_seed;
      config.validate();
      return report(run_experiment(config, run_opts), run_opts.out);
    }
    if (*suite) {
      const auto config = paper_suite_config(suite_seed, quick);
      return report(run_experiment(config, suite_opts), suite_opts.out);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
