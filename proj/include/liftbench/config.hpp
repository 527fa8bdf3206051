#pragma once

// Declarative run configuration. A config is a JSON object; every field is
// optional and falls back to the defaults below. Relative paths resolve
// against the directory holding the config file.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "liftbench/corpus.hpp"
#include "liftbench/cuts.hpp"
#include "liftbench/gateway.hpp"
#include "liftbench/jsonl.hpp"
#include "liftbench/metrics.hpp"
#include "liftbench/scaffold.hpp"

namespace liftbench {

enum class CutMode { Equation, Prose };

std::string_view cut_mode_name(CutMode m);
CutMode parse_cut_mode(std::string_view s);

struct ProviderConfig {
  /// mock | openai_responses | anthropic_messages | completions_echo
  std::string kind;
  std::string base_url;
  std::string api_key_env;
  int max_in_flight = 4;
  double cost_per_call = 0.0;
  std::string training_dir;  // mock scorer corpus
};

struct RunConfig {
  std::string run_id;
  std::string config_digest;
  std::string base_dir = ".";

  std::uint64_t seed = 0;
  CutMode mode = CutMode::Equation;
  std::string output_dir = "out";
  std::string cache_path;  // defaults to <output_dir>/cache.jsonl

  std::vector<std::string> inputs;  // files or directories
  std::vector<std::string> urls;
  IngestFilter filters;

  EquationCutConfig equation;
  ProseCutConfig prose;
  ScaffoldConfig scaffold;

  std::vector<PredictorSetting> predictors;
  int repeats = 1;
  std::vector<std::string> scorers;
  /// Condition kinds to score; forecast conditions expand per predictor.
  std::vector<std::string> conditions;
  /// "lhs|rhs" condition-label pairs; empty means the default set.
  std::vector<std::string> contrasts;
  std::vector<MetricKind> metrics;
  std::vector<std::size_t> windows;
  double alpha = 0.05;
  bool exclude_straddled = false;
  std::optional<std::string> cut_manifest;  // file of cut ids to restrict analysis to
  std::optional<std::string> subset_baseline;
  double subset_quantile = 0.2;

  double max_spend = INFINITY;
  bool offline = false;
  int workers = 8;
  RetryPolicy retry;
  std::map<std::string, ProviderConfig> providers;

  /// Path relative to base_dir unless absolute.
  std::string resolve(const std::string& path) const;
  std::string output_path(const std::string& name) const;
};

/// Parses a config object. The digest is taken over the canonical form of
/// `j`, so any field change (including CLI overrides merged into `j`)
/// changes it.
RunConfig config_from_json(const Json& j, const std::string& base_dir);

/// Reads a config file; an empty path yields the defaults.
Json read_config_json(const std::string& path);

/// Providers available without configuration: mock, openai, anthropic, fireworks.
std::map<std::string, ProviderConfig> default_providers();

}  // namespace liftbench
