#pragma once

#include <string>
#include <utility>
#include <vector>

namespace flowforms::experiments {

/** Outcome of one experiment run, serialization-ready. */
struct RunResult {
  std::string kind;
  std::string name;
  bool passed = true;  // conjunction of the verdicts
  std::vector<std::pair<std::string, bool>> verdicts;
  int discarded = 0;
  std::string report_json;  // deterministic key order and number rendering
  std::string tables_csv;   // long format: experiment,checkpoint,statistic,value
  std::string output_dir;   // from the config ("" = none requested)
};

/**
 * Parses, validates (strict schema: unknown keys rejected) and runs a JSON
 * experiment config. Throws ConfigError for schema violations and
 * NumericalError when the computation degenerates.
 */
RunResult run_config_text(const std::string& config_text);

/** Experiment kinds accepted by run_config_text, sorted. */
std::vector<std::string> experiment_kinds();

}  // namespace flowforms::experiments
