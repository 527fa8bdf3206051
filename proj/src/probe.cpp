#include "liftbench/probe.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "liftbench/errors.hpp"
#include "liftbench/metrics.hpp"

namespace liftbench {

namespace {

constexpr ProbeCondition kConditions[] = {ProbeCondition::Context, ProbeCondition::Exact, ProbeCondition::Reordered,
                                          ProbeCondition::WrongSymbol, ProbeCondition::Empty};

const char* const kOpen = "\\[\n";
const char* const kClose = "\n\\]";
const char* const kPrefix = "Z =";

}  // namespace

std::string_view probe_condition_name(ProbeCondition c) {
  switch (c) {
    case ProbeCondition::Context: return "context (no forecast)";
    case ProbeCondition::Exact: return "exact forecast";
    case ProbeCondition::Reordered: return "reordered forecast";
    case ProbeCondition::WrongSymbol: return "wrong-symbol forecast";
    case ProbeCondition::Empty: return "empty scaffold";
  }
  return "";
}

std::vector<ProbeCase> toy_probe_cases() {
  const std::string sums = "Here are some equations involving some sums.";
  const std::string products = "Here are some equations involving some products.";
  return {
      {"X+A+B", " X + A + B", " X + B + A", " X + Y", sums, 9},
      {"X+B+A", " X + B + A", " X + A + B", " X + Y", sums, 9},
      {"X+AB", " X + AB", " X + BA", " X + Y", products, 6},
      {"X+BA", " X + BA", " X + AB", " X + Y", products, 6},
  };
}

ScoredPrompt toy_probe_prompt(const ProbeCase& pc, ProbeCondition cond) {
  std::string prompt;
  auto first_equation = [&](const std::string& z) {
    prompt += "% First equation:\n";
    prompt += kOpen;
    prompt += kPrefix + z;
    prompt += kClose;
    prompt += "\n\n% Same equation:\n";
  };
  switch (cond) {
    case ProbeCondition::Exact: first_equation(pc.target); break;
    case ProbeCondition::Reordered: first_equation(pc.reordered); break;
    case ProbeCondition::WrongSymbol: first_equation(pc.wrong_symbol); break;
    case ProbeCondition::Context: prompt += pc.context_sentence + "\n"; break;
    case ProbeCondition::Empty: break;
  }
  prompt += kOpen;
  // the space after "=" belongs to the target so it tokenizes with the symbol
  prompt += kPrefix;
  // the scored target omits the closing delimiter
  return {prompt, pc.target, prompt.size()};
}

double token_probability_at(const ScoreRecord& rec, std::size_t offset) {
  const std::size_t abs = rec.prompt_char_len + offset;
  for (auto i : rec.target_token_indices) {
    const auto& t = rec.tokens.at(i);
    if (t.begin <= abs && abs < t.end) return std::exp(t.logprob);
  }
  throw AlignmentError(fmt::format("no target token covers offset {}", offset));
}

const ProbeRow& ProbeReport::row(const std::string& case_name, ProbeCondition c) const {
  for (const auto& r : rows) {
    if (r.case_name == case_name && r.condition == c) return r;
  }
  throw Error("no probe row for " + case_name + " / " + std::string(probe_condition_name(c)));
}

std::string ProbeReport::markdown() const {
  std::string out = fmt::format("# Toy equivalent-continuation probe\n\nScorer: `{}`\n\n", scorer_id);
  out += "| Case | Condition | Raw | clip_ll_2 | vs. empty |\n|---|---|---:|---:|---:|\n";
  for (const auto& r : rows) {
    out += fmt::format("| {} | {} | {:.3f} | {:.3f} | {:+.3f} |\n", r.case_name, probe_condition_name(r.condition),
                       r.raw, r.clip2, r.vs_empty);
  }
  out += "\n## Recovery-point probabilities\n\n";
  out += "Probability of the true next symbol once the scored prefix has passed the point where the reordered "
         "forecast diverges.\n\n";
  out += "| Case | Exact | Reordered | Wrong symbol | Empty |\n|---|---:|---:|---:|---:|\n";
  std::vector<std::string> seen;
  for (const auto& r : rows) {
    if (std::find(seen.begin(), seen.end(), r.case_name) != seen.end()) continue;
    seen.push_back(r.case_name);
    out += fmt::format("| {} | {:.3f} | {:.3f} | {:.3f} | {:.3f} |\n", r.case_name,
                       row(r.case_name, ProbeCondition::Exact).recovery_probability,
                       row(r.case_name, ProbeCondition::Reordered).recovery_probability,
                       row(r.case_name, ProbeCondition::WrongSymbol).recovery_probability,
                       row(r.case_name, ProbeCondition::Empty).recovery_probability);
  }
  return out;
}

ProbeReport run_toy_probe(ModelGateway& gateway, const std::string& scorer_id) {
  ProbeReport report;
  report.scorer_id = scorer_id;
  for (const auto& pc : toy_probe_cases()) {
    std::vector<ProbeRow> rows;
    double empty_clip = 0.0;
    for (const auto cond : kConditions) {
      const auto sp = toy_probe_prompt(pc, cond);
      const auto rec = gateway.score_target(sp, scorer_id, "probe/" + pc.name, std::string(probe_condition_name(cond)));
      const TokenLogLikelihoods lams(rec.target_lambdas());
      ProbeRow row;
      row.case_name = pc.name;
      row.condition = cond;
      row.raw = score(lams, MetricKind::raw_ll());
      row.clip2 = score(lams, MetricKind::clip_ll(2.0));
      row.recovery_probability = token_probability_at(rec, pc.recovery_offset);
      if (cond == ProbeCondition::Empty) empty_clip = row.clip2;
      rows.push_back(row);
    }
    for (auto& r : rows) r.vs_empty = r.clip2 - empty_clip;
    report.rows.insert(report.rows.end(), rows.begin(), rows.end());
  }
  return report;
}

}  // namespace liftbench
