#pragma once

#include "aeg/scene_graph.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>

namespace aeg::cli {

/// Every setting a run depends on. Echoed into each output file.
struct RunConfig {
  std::string backend = "mock";
  std::string rules;  // mock rules file
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4o";
  double temperature = 0.0;
  std::string cache_dir;
  int concurrency = 4;
  int threads = 1;  // not echoed: results do not depend on it
  std::uint64_t seed = 0;
  RelationConfig relations;
  double tau = 2.0;
  int k = 4;
  int threshold = 50;
  std::string keyframe = "neighbor_sum";
  std::string calibration = "fixed_standard";
  std::string task = "tidy the house";

  /// Throws Error{InvalidInput} on out-of-range values.
  void validate() const;
  /// Keys present in `json` override the current values.
  void merge(const nlohmann::json& json);
  /// The echo. The rules file is identified by its SHA-256.
  nlohmann::json to_json() const;
};

/// Exit status for a library error: 2 precondition, 3 auth/transport,
/// 4 schema, 1 anything else.
int exit_code_for(const std::exception& e);

/// Entry point of the `aeg` tool. Never throws; returns the exit status and
/// prints a single `error: <Kind>: <message>` line to stderr on failure.
int run_cli(int argc, const char* const* argv);

}  // namespace aeg::cli
