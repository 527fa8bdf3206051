#pragma once

// Toy equivalent-continuation probe. A short target such as "X + A + B" is
// scored after five kinds of scaffold: an exact forecast, a reordered one, a
// wrong-symbol one, a context sentence without a forecast, and nothing. The
// recovery table reports the probability of the true next symbol right
// after the point where the reordered forecast diverges from the target.

#include <string>
#include <vector>

#include "liftbench/gateway.hpp"
#include "liftbench/scaffold.hpp"

namespace liftbench {

enum class ProbeCondition { Context, Exact, Reordered, WrongSymbol, Empty };

std::string_view probe_condition_name(ProbeCondition c);

struct ProbeCase {
  std::string name;       // "X+A+B"
  std::string target;     // " X + A + B", leading space included
  std::string reordered;  // forecast with the two last symbols swapped
  std::string wrong_symbol;
  std::string context_sentence;
  /// Offset in `target` of the symbol whose probability is reported.
  std::size_t recovery_offset = 0;
};

/// The addition cases X+A+B, X+B+A and the juxtaposed products X+AB, X+BA.
std::vector<ProbeCase> toy_probe_cases();

ScoredPrompt toy_probe_prompt(const ProbeCase& pc, ProbeCondition cond);

struct ProbeRow {
  std::string case_name;
  ProbeCondition condition = ProbeCondition::Empty;
  double raw = 0.0;
  double clip2 = 0.0;
  double vs_empty = 0.0;
  double recovery_probability = 0.0;
};

struct ProbeReport {
  std::string scorer_id;
  std::vector<ProbeRow> rows;

  const ProbeRow& row(const std::string& case_name, ProbeCondition c) const;
  std::string markdown() const;
};

/// exp(logprob) of the target token covering `offset` (relative to the
/// target start).
double token_probability_at(const ScoreRecord& rec, std::size_t offset);

ProbeReport run_toy_probe(ModelGateway& gateway, const std::string& scorer_id);

}  // namespace liftbench
