#include "liftbench/scaffold.hpp"

#include <fmt/format.h>

#include <array>
#include <utility>

#include "liftbench/errors.hpp"
#include "liftbench/text.hpp"

namespace liftbench {

namespace {

constexpr std::array<std::pair<ConditionKind, std::string_view>, 7> kKindNames{{
    {ConditionKind::EmptyScaffold, "empty"},
    {ConditionKind::SameBudgetContext, "same_budget"},
    {ConditionKind::TripleBudgetContext, "triple_budget"},
    {ConditionKind::ForecastScaffold, "forecast"},
    {ConditionKind::TrueSuffixScaffold, "true_suffix"},
    {ConditionKind::ProseForecastScaffold, "prose_forecast"},
    {ConditionKind::ProseContextControl, "prose_context"},
}};

const std::string& require_z(const ScoringCondition& cond) {
  if (!cond.z_text) throw MissingZ("condition '" + cond.label + "' carries no z_text");
  return *cond.z_text;
}

ScoredPrompt make_prompt(std::string prompt, std::string target) {
  ScoredPrompt sp;
  sp.prompt_char_len = prompt.size();
  sp.prompt_text = std::move(prompt);
  sp.target_text = std::move(target);
  if (sp.target_text.empty()) throw EmptyTarget("scored target is empty");
  return sp;
}

}  // namespace

std::string_view condition_kind_name(ConditionKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::optional<ConditionKind> condition_kind_from_name(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

bool is_equation_condition(ConditionKind kind) {
  return kind != ConditionKind::ProseForecastScaffold && kind != ConditionKind::ProseContextControl;
}

ScoringCondition ScoringCondition::empty_scaffold() {
  return {ConditionKind::EmptyScaffold, std::nullopt, std::nullopt, "empty"};
}

ScoringCondition ScoringCondition::same_budget(std::optional<std::size_t> budget) {
  return {ConditionKind::SameBudgetContext, std::nullopt, budget, "same_budget"};
}

ScoringCondition ScoringCondition::triple_budget(std::optional<std::size_t> budget) {
  return {ConditionKind::TripleBudgetContext, std::nullopt, budget, "triple_budget"};
}

ScoringCondition ScoringCondition::forecast(std::string z, const std::string& setting_label) {
  return {ConditionKind::ForecastScaffold, std::move(z), std::nullopt, "forecast:" + setting_label};
}

ScoringCondition ScoringCondition::true_suffix(std::string y) {
  return {ConditionKind::TrueSuffixScaffold, std::move(y), std::nullopt, "true_suffix"};
}

ScoringCondition ScoringCondition::prose_forecast(std::string z, const std::string& setting_label) {
  return {ConditionKind::ProseForecastScaffold, std::move(z), std::nullopt, "prose_forecast:" + setting_label};
}

ScoringCondition ScoringCondition::prose_context(std::size_t budget) {
  return {ConditionKind::ProseContextControl, std::nullopt, budget, "prose_context"};
}

std::string truncate_forecast(std::string_view z, std::size_t budget) { return std::string(head_within(z, budget)); }

std::size_t predictor_length_hint(std::size_t suffix_len) { return (suffix_len + 5) / 10 * 10; }

std::string build_predictor_prompt_equation(const EquationCut& cut) {
  std::string prompt = fmt::format(
      "You are given recent context from a technical paper and the beginning of a\n"
      "LaTeX display equation.\n"
      "Continue the equation from exactly where it stops, in about {} characters or fewer.\n"
      "Write only the continuation. Do not write explanatory prose. Do not write {}.\n"
      "\n"
      "Recent paper context:\n",
      predictor_length_hint(cut.suffix_y.size()), cut.closing_delimiter);
  prompt += cut.context_chars;
  // exactly one blank line before the prefix block
  prompt += cut.context_chars.ends_with('\n') ? "\n" : "\n\n";
  prompt += "Equation prefix:\n";
  prompt += cut.opening_delimiter();
  prompt += cut.prefix;
  return prompt;
}

std::string build_predictor_prompt_prose(const ProseCut& cut, const ScaffoldConfig& config) {
  std::string prompt = fmt::format(
      "You are given recent context from a technical paper written in LaTeX.\n"
      "Continue the paper from exactly where the context stops, in about {} characters or fewer.\n"
      "Write only the continuation as LaTeX source. Do not comment on the task.\n"
      "\n"
      "Recent paper context:\n",
      config.prose_predictor_chars);
  prompt += cut.context_pred;
  return prompt;
}

ScoredPrompt build_scorer_prompt_equation(const EquationCut& cut, const ScoringCondition& cond,
                                          const ScaffoldConfig& config) {
  const std::string open = cut.opening_delimiter();
  std::string target = cut.suffix_y + cut.closing_delimiter;
  auto context_control = [&](std::size_t budget) {
    if (cut.context_chars.size() < budget) {
      throw InsufficientSource(fmt::format("{} needs {} characters before the equation, {} available", cut.cut_id,
                                           budget, cut.context_chars.size()));
    }
    std::string prompt(tail_before(cut.context_chars, cut.context_chars.size(), budget));
    prompt += open;
    prompt += cut.prefix;
    return make_prompt(std::move(prompt), std::move(target));
  };

  switch (cond.kind) {
    case ConditionKind::EmptyScaffold:
      return make_prompt(open + cut.prefix, std::move(target));
    case ConditionKind::ForecastScaffold:
    case ConditionKind::TrueSuffixScaffold: {
      const std::string& z = require_z(cond);
      std::string prompt = open;
      prompt += cut.prefix;
      prompt += truncate_forecast(z, cut.budget_b);
      prompt += cut.closing_delimiter;
      prompt += config.separator;
      prompt += open;
      prompt += cut.prefix;
      return make_prompt(std::move(prompt), std::move(target));
    }
    case ConditionKind::SameBudgetContext:
      return context_control(cond.budget.value_or(cut.budget_b));
    case ConditionKind::TripleBudgetContext:
      return context_control(cond.budget.value_or(3 * cut.budget_b));
    default:
      throw InvalidCondition(std::string(condition_kind_name(cond.kind)) + " is not an equation condition");
  }
}

ScoredPrompt build_scorer_prompt_prose(const ProseCut& cut, const ScoringCondition& cond,
                                       const ScaffoldConfig& config) {
  switch (cond.kind) {
    case ConditionKind::ProseForecastScaffold: {
      const std::string& z = require_z(cond);
      std::string prompt = cut.pre2000;
      prompt += config.separator;
      prompt += truncate_forecast(z, config.prose_forecast_budget);
      prompt += config.separator;
      prompt += cut.pre2000;
      return make_prompt(std::move(prompt), cut.target_y);
    }
    case ConditionKind::ProseContextControl:
      return make_prompt(cut.pre3000, cut.target_y);
    default:
      throw InvalidCondition(std::string(condition_kind_name(cond.kind)) + " is not a prose condition");
  }
}

Json to_json(const ScoredPrompt& sp, const std::string& cut_id, const std::string& condition) {
  return Json{{"cut_id", cut_id}, {"condition", condition}, {"prompt_text", sp.prompt_text},
              {"target_text", sp.target_text}};
}

}  // namespace liftbench
