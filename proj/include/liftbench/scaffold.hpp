#pragma once

// Predictor prompts, scorer scaffolds and control prompts. Everything here is
// a pure string transformation and must stay byte-stable: the cache keys and
// golden files depend on it.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "liftbench/cuts.hpp"

namespace liftbench {

enum class ConditionKind {
  EmptyScaffold,
  SameBudgetContext,
  TripleBudgetContext,
  ForecastScaffold,
  TrueSuffixScaffold,
  ProseForecastScaffold,
  ProseContextControl,
};

std::string_view condition_kind_name(ConditionKind kind);
std::optional<ConditionKind> condition_kind_from_name(std::string_view name);
bool is_equation_condition(ConditionKind kind);

struct ScoringCondition {
  ConditionKind kind = ConditionKind::EmptyScaffold;
  std::optional<std::string> z_text;
  std::optional<std::size_t> budget;
  /// Stable identifier used in score records, e.g. "same_budget" or
  /// "forecast:openai/gpt-5.5:high".
  std::string label;

  static ScoringCondition empty_scaffold();
  /// Context controls default to the cut's B (or 3B) when budget is unset.
  static ScoringCondition same_budget(std::optional<std::size_t> budget = std::nullopt);
  static ScoringCondition triple_budget(std::optional<std::size_t> budget = std::nullopt);
  static ScoringCondition forecast(std::string z, const std::string& setting_label);
  static ScoringCondition true_suffix(std::string y);
  static ScoringCondition prose_forecast(std::string z, const std::string& setting_label);
  static ScoringCondition prose_context(std::size_t budget = 3000);
};

struct ScoredPrompt {
  std::string prompt_text;
  std::string target_text;
  std::size_t prompt_char_len = 0;
};

struct ScaffoldConfig {
  std::string separator = "\n\n";  // one blank line between scaffold blocks
  std::size_t prose_forecast_budget = 1000;
  std::size_t prose_predictor_chars = 1800;
};

/// First `budget` characters of z, never splitting a multi-byte character.
std::string truncate_forecast(std::string_view z, std::size_t budget);

/// |Y| rounded to the nearest 10 (halves round up), as quoted in the header.
std::size_t predictor_length_hint(std::size_t suffix_len);

std::string build_predictor_prompt_equation(const EquationCut& cut);
std::string build_predictor_prompt_prose(const ProseCut& cut, const ScaffoldConfig& config = {});

ScoredPrompt build_scorer_prompt_equation(const EquationCut& cut, const ScoringCondition& cond,
                                          const ScaffoldConfig& config = {});
ScoredPrompt build_scorer_prompt_prose(const ProseCut& cut, const ScoringCondition& cond,
                                       const ScaffoldConfig& config = {});

Json to_json(const ScoredPrompt& sp, const std::string& cut_id, const std::string& condition);

}  // namespace liftbench
