#pragma once

// Cut extraction: equation-suffix cuts sliced inside displayed equations and
// prose/TeX continuation cuts placed at environment-free paragraph breaks.
// Extraction is a pure function of (paper, config, seed).

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "liftbench/corpus.hpp"
#include "liftbench/diagnostics.hpp"
#include "liftbench/jsonl.hpp"

namespace liftbench {

struct EquationCutConfig {
  /// Display environments; starred forms are always accepted too.
  std::vector<std::string> environments{"equation", "align", "gather", "multline", "eqnarray", "displaymath"};
  bool bracket_display = true;  // \[ ... \]
  /// Single-symbol operators. U+2212 is the Unicode minus.
  std::vector<std::string> operator_symbols{"=", "+", "-", "\xE2\x88\x92", "<", ">"};
  /// Control words matched as whole tokens (\le matches, \left does not).
  std::vector<std::string> operator_commands{"le",      "leq",   "ge",     "geq", "sim",    "simeq", "approx",
                                             "equiv",   "propto", "to",    "mapsto", "subset", "in"};
  std::size_t context_chars = 10000;
  std::size_t min_suffix = 50;
  std::size_t max_suffix = 400;
  std::size_t budget_pad = 40;  // B = |Y| + pad
  std::size_t max_cuts_per_paper = 10;
};

/// One displayed-equation occurrence in a paper's text.
struct DisplayEquation {
  std::string env_name;  // "[" for \[ ... \]
  std::size_t eq_start = 0;
  std::size_t body_start = 0;
  std::size_t body_end = 0;
  std::size_t eq_end = 0;  // one past the closing delimiter
  std::string closing_delimiter;
};

inline constexpr std::string_view kBracketDisplay = "[";

std::string opening_delimiter_for(const std::string& env_name);
std::string closing_delimiter_for(const std::string& env_name);

struct EquationCut {
  std::string cut_id;
  std::string paper_id;
  std::string env_name;
  std::size_t eq_start = 0;
  std::size_t body_start = 0;
  std::size_t body_end = 0;
  std::size_t cut_offset = 0;
  std::string prefix;
  std::string suffix_y;
  std::string closing_delimiter;
  std::string context_chars;
  std::size_t budget_b = 0;
  std::string equation_key;

  std::string opening_delimiter() const { return opening_delimiter_for(env_name); }
};

struct ProseCutConfig {
  std::size_t context_chars = 10000;
  std::size_t target_chars = 2000;
  std::size_t equation_scan_chars = 1800;
  std::size_t pre_short = 2000;
  std::size_t pre_long = 3000;
  std::size_t max_cuts_per_paper = 20;
  std::vector<std::string> math_environments{"equation", "align", "gather", "multline", "eqnarray", "displaymath"};
};

struct ProseCut {
  std::string cut_id;
  std::string paper_id;
  std::size_t cut_offset = 0;
  std::string target_y;
  std::string context_pred;
  std::string pre2000;
  std::string pre3000;
  bool has_equation_material = false;
};

/// Every well-balanced display environment, outermost only, in document
/// order. Unclosed environments are skipped and logged ("unclosed-environment").
std::vector<DisplayEquation> scan_display_equations(const PaperSource& paper, const EquationCutConfig& config = {},
                                                    Diagnostics* diag = nullptr);

/// Offsets immediately after each operator token in `body`, ascending.
std::vector<std::size_t> operator_sites(std::string_view body, const EquationCutConfig& config = {});

/// Seeded uniform choice among operator sites inside the closed middle third
/// [L/3, 2L/3] of the body. nullopt when there is no such site.
std::optional<std::size_t> select_cut_site(std::string_view body, std::uint64_t seed,
                                           const EquationCutConfig& config = {});

std::vector<EquationCut> extract_equation_cuts(const PaperSource& paper, const EquationCutConfig& config,
                                               std::uint64_t seed, Diagnostics* diag = nullptr);

/// Paragraph-break offsets (first character after a blank-line run) at which
/// no environment other than `document` is open.
std::vector<std::size_t> prose_boundaries(std::string_view text);

/// Why a prose cut at `offset` is inadmissible, or nullopt when it is fine.
std::optional<std::string> prose_cut_rejection(const PaperSource& paper, std::size_t offset,
                                               const ProseCutConfig& config = {});

bool has_equation_material(std::string_view target, const ProseCutConfig& config = {});

ProseCut make_prose_cut(const PaperSource& paper, std::size_t offset, std::string cut_id,
                        const ProseCutConfig& config = {});

std::vector<ProseCut> extract_prose_cuts(const PaperSource& paper, const ProseCutConfig& config,
                                         std::uint64_t seed, Diagnostics* diag = nullptr);

/// Per-paper accepted/rejected counts with reasons, as plain text.
std::string extraction_report(const std::vector<std::pair<std::string, std::size_t>>& accepted_per_paper,
                              const Diagnostics& diag);

Json to_json(const EquationCut& cut);
Json to_json(const ProseCut& cut);
EquationCut equation_cut_from_json(const Json& j);
ProseCut prose_cut_from_json(const Json& j);

}  // namespace liftbench
