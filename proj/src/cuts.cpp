#include "liftbench/cuts.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "liftbench/text.hpp"

namespace liftbench {

namespace {

bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

std::size_t end_of_line(std::string_view s, std::size_t i) {
  const std::size_t eol = s.find('\n', i);
  return eol == std::string_view::npos ? s.size() : eol;
}

/// Name inside \begin{...} or \end{...} starting at `brace` (the '{').
/// Returns the offset one past '}' or npos when malformed.
std::size_t read_env_name(std::string_view s, std::size_t brace, std::string& name) {
  const std::size_t close = s.find('}', brace + 1);
  if (close == std::string_view::npos) return std::string_view::npos;
  const std::string_view raw = s.substr(brace + 1, close - brace - 1);
  if (raw.empty() || raw.find('\n') != std::string_view::npos || raw.size() > 64) return std::string_view::npos;
  name.assign(raw);
  return close + 1;
}

bool starts_at(std::string_view s, std::size_t i, std::string_view what) {
  return s.size() >= i + what.size() && s.compare(i, what.size(), what) == 0;
}

bool is_display_env(const std::string& name, const std::vector<std::string>& envs) {
  std::string_view base(name);
  if (base.ends_with('*')) base.remove_suffix(1);
  return std::find(envs.begin(), envs.end(), base) != envs.end();
}

/// Offset of the \end{name} that closes an environment whose body starts at
/// `from`, honouring nested environments of the same name. npos if unclosed.
std::size_t find_env_close(std::string_view s, const std::string& name, std::size_t from) {
  const std::string open = "\\begin{" + name + "}";
  const std::string close = "\\end{" + name + "}";
  int depth = 1;
  std::size_t i = from;
  while (i < s.size()) {
    const char c = s[i];
    if (c == '%') {
      i = end_of_line(s, i);
    } else if (c == '\\') {
      if (starts_at(s, i, open)) {
        ++depth;
        i += open.size();
      } else if (starts_at(s, i, close)) {
        if (--depth == 0) return i;
        i += close.size();
      } else {
        i += 2;
      }
    } else {
      ++i;
    }
  }
  return std::string_view::npos;
}

std::size_t find_bracket_close(std::string_view s, std::size_t from) {
  std::size_t i = from;
  while (i < s.size()) {
    const char c = s[i];
    if (c == '%') {
      i = end_of_line(s, i);
    } else if (c == '\\') {
      if (i + 1 < s.size() && s[i + 1] == ']') return i;
      i += 2;
    } else {
      ++i;
    }
  }
  return std::string_view::npos;
}

struct ProseStructure {
  std::vector<std::size_t> boundaries;
  std::vector<std::string> open_at_stop;
};

/// Tracks open environments (document excluded, \[ counted) up to `stop`,
/// collecting blank-line paragraph boundaries seen with an empty stack.
ProseStructure scan_prose_structure(std::string_view s, std::size_t stop) {
  ProseStructure out;
  std::vector<std::string> stack;
  stop = std::min(stop, s.size());
  std::size_t i = 0;
  std::string name;
  while (i < stop) {
    const char c = s[i];
    if (c == '%') {
      i = end_of_line(s, i);
      continue;
    }
    if (c == '\\') {
      if (starts_at(s, i, "\\begin{")) {
        const std::size_t next = read_env_name(s, i + 6, name);
        if (next != std::string_view::npos) {
          if (name != "document") stack.push_back(name);
          i = next;
          continue;
        }
      } else if (starts_at(s, i, "\\end{")) {
        const std::size_t next = read_env_name(s, i + 4, name);
        if (next != std::string_view::npos) {
          const auto it = std::find(stack.rbegin(), stack.rend(), name);
          if (it != stack.rend()) stack.erase(std::next(it).base(), stack.end());
          i = next;
          continue;
        }
      } else if (i + 1 < s.size() && s[i + 1] == '[') {
        stack.emplace_back(kBracketDisplay);
      } else if (i + 1 < s.size() && s[i + 1] == ']') {
        if (!stack.empty() && stack.back() == kBracketDisplay) stack.pop_back();
      }
      i += 2;
      continue;
    }
    if (c == '\n') {
      std::size_t j = i + 1;
      while (j < s.size() && (s[j] == ' ' || s[j] == '\t')) ++j;
      if (j < s.size() && s[j] == '\n') {
        std::size_t k = j;
        while (k < s.size() && (s[k] == ' ' || s[k] == '\t' || s[k] == '\n')) ++k;
        if (k < stop && stack.empty()) out.boundaries.push_back(k);
        i = k;
        continue;
      }
    }
    ++i;
  }
  out.open_at_stop = std::move(stack);
  return out;
}

std::pair<std::size_t, std::size_t> document_span(std::string_view text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  if (const auto b = text.find("\\begin{document}"); b != std::string_view::npos) begin = b;
  if (const auto e = text.rfind("\\end{document}"); e != std::string_view::npos && e > begin) end = e;
  return {begin, end};
}

}  // namespace

std::string opening_delimiter_for(const std::string& env_name) {
  return env_name == kBracketDisplay ? std::string("\\[") : "\\begin{" + env_name + "}";
}

std::string closing_delimiter_for(const std::string& env_name) {
  return env_name == kBracketDisplay ? std::string("\\]") : "\\end{" + env_name + "}";
}

std::vector<DisplayEquation> scan_display_equations(const PaperSource& paper, const EquationCutConfig& config,
                                                    Diagnostics* diag) {
  const std::string_view s = paper.text;
  std::vector<DisplayEquation> hits;
  std::size_t i = 0;
  std::string name;
  auto malformed = [&](std::size_t at, const std::string& env) {
    spdlog::debug("{}: unclosed display environment '{}' at {}", paper.paper_id, env, at);
    if (diag) diag->add(paper.paper_id, at, "unclosed-environment", env);
  };
  while (i < s.size()) {
    const char c = s[i];
    if (c == '%') {
      i = end_of_line(s, i);
      continue;
    }
    if (c != '\\') {
      ++i;
      continue;
    }
    if (starts_at(s, i, "\\begin{")) {
      const std::size_t body_start = read_env_name(s, i + 6, name);
      if (body_start != std::string_view::npos && is_display_env(name, config.environments)) {
        const std::size_t close = find_env_close(s, name, body_start);
        if (close == std::string_view::npos) {
          malformed(i, name);
          i = body_start;
          continue;
        }
        const std::string closer = closing_delimiter_for(name);
        hits.push_back({name, i, body_start, close, close + closer.size(), closer});
        i = close + closer.size();
        continue;
      }
    } else if (config.bracket_display && i + 1 < s.size() && s[i + 1] == '[') {
      const std::size_t close = find_bracket_close(s, i + 2);
      if (close == std::string_view::npos) {
        malformed(i, std::string(kBracketDisplay));
        i += 2;
        continue;
      }
      hits.push_back({std::string(kBracketDisplay), i, i + 2, close, close + 2, "\\]"});
      i = close + 2;
      continue;
    }
    i += 2;
  }
  return hits;
}

std::vector<std::size_t> operator_sites(std::string_view body, const EquationCutConfig& config) {
  std::vector<std::size_t> sites;
  std::size_t i = 0;
  while (i < body.size()) {
    const char c = body[i];
    if (c == '%') {
      i = end_of_line(body, i);
      continue;
    }
    if (c == '\\') {
      std::size_t j = i + 1;
      while (j < body.size() && is_alpha(body[j])) ++j;
      if (j == i + 1) {
        i = std::min(i + 2, body.size());
        continue;
      }
      const std::string_view word = body.substr(i + 1, j - i - 1);
      if (std::find(config.operator_commands.begin(), config.operator_commands.end(), word) !=
          config.operator_commands.end()) {
        sites.push_back(j);
      }
      i = j;
      continue;
    }
    bool matched = false;
    for (const auto& sym : config.operator_symbols) {
      if (!sym.empty() && starts_at(body, i, sym)) {
        i += sym.size();
        sites.push_back(i);
        matched = true;
        break;
      }
    }
    if (!matched) ++i;
  }
  return sites;
}

std::optional<std::size_t> select_cut_site(std::string_view body, std::uint64_t seed,
                                           const EquationCutConfig& config) {
  const std::size_t len = body.size();
  std::vector<std::size_t> inside;
  for (std::size_t pos : operator_sites(body, config)) {
    // closed middle third: L/3 <= pos <= 2L/3, in exact integer arithmetic
    if (3 * pos >= len && 3 * pos <= 2 * len) inside.push_back(pos);
  }
  if (inside.empty()) return std::nullopt;
  SeededRng rng(seed);
  return inside[rng.below(inside.size())];
}

std::vector<EquationCut> extract_equation_cuts(const PaperSource& paper, const EquationCutConfig& config,
                                               std::uint64_t seed, Diagnostics* diag) {
  const std::string_view text = paper.text;
  std::vector<EquationCut> cuts;
  std::set<std::string> seen_keys;
  auto reject = [&](const DisplayEquation& eq, const char* reason, std::string detail = {}) {
    spdlog::debug("{}: equation at {} rejected ({})", paper.paper_id, eq.eq_start, reason);
    if (diag) diag->add(paper.paper_id, eq.eq_start, reason, std::move(detail));
  };

  for (const auto& eq : scan_display_equations(paper, config, diag)) {
    const std::string_view source = text.substr(eq.eq_start, eq.eq_end - eq.eq_start);
    const std::string key = paper.paper_id + ":" + hex64(fnv1a64(source));
    if (eq.eq_start < config.context_chars) {
      reject(eq, "insufficient-context");
      continue;
    }
    const std::string_view body = text.substr(eq.body_start, eq.body_end - eq.body_start);
    const auto site = select_cut_site(body, splitmix64(seed ^ fnv1a64(key)), config);
    if (!site) {
      reject(eq, "no-operator-site");
      continue;
    }
    const std::string_view suffix = body.substr(*site);
    if (suffix.size() < config.min_suffix) {
      reject(eq, "suffix-too-short", std::to_string(suffix.size()));
      continue;
    }
    if (suffix.size() > config.max_suffix) {
      reject(eq, "suffix-too-long", std::to_string(suffix.size()));
      continue;
    }
    const std::string_view context = tail_before(text, eq.eq_start, config.context_chars);
    if (context.find(suffix) != std::string_view::npos) {
      reject(eq, "verbatim-context");
      continue;
    }
    if (seen_keys.contains(key)) {
      reject(eq, "duplicate-equation", key);
      continue;
    }
    if (cuts.size() >= config.max_cuts_per_paper) {
      reject(eq, "per-paper-cap");
      continue;
    }
    seen_keys.insert(key);

    EquationCut cut;
    cut.cut_id = fmt::format("{}/eq{:02}", paper.paper_id, cuts.size());
    cut.paper_id = paper.paper_id;
    cut.env_name = eq.env_name;
    cut.eq_start = eq.eq_start;
    cut.body_start = eq.body_start;
    cut.body_end = eq.body_end;
    cut.cut_offset = eq.body_start + *site;
    cut.prefix = std::string(body.substr(0, *site));
    cut.suffix_y = std::string(suffix);
    cut.closing_delimiter = eq.closing_delimiter;
    cut.context_chars = std::string(context);
    cut.budget_b = cut.suffix_y.size() + config.budget_pad;
    cut.equation_key = key;
    cuts.push_back(std::move(cut));
  }
  return cuts;
}

std::vector<std::size_t> prose_boundaries(std::string_view text) {
  const auto [doc_begin, doc_end] = document_span(text);
  std::vector<std::size_t> out;
  for (std::size_t b : scan_prose_structure(text, doc_end).boundaries) {
    if (b > doc_begin) out.push_back(b);
  }
  return out;
}

std::optional<std::string> prose_cut_rejection(const PaperSource& paper, std::size_t offset,
                                               const ProseCutConfig& config) {
  const std::string_view text = paper.text;
  if (offset > text.size()) return "out-of-range";
  if (!scan_prose_structure(text, offset).open_at_stop.empty()) return "inside-environment";
  const auto bounds = prose_boundaries(text);
  if (!std::binary_search(bounds.begin(), bounds.end(), offset)) return "not-paragraph-break";
  if (offset < config.context_chars || offset < config.pre_long) return "insufficient-context";
  if (document_span(text).second - offset < config.target_chars) return "insufficient-target";
  return std::nullopt;
}

bool has_equation_material(std::string_view target, const ProseCutConfig& config) {
  const std::string_view s = head_within(target, config.equation_scan_chars);
  std::string name;
  for (std::size_t i = 0; i < s.size();) {
    const char c = s[i];
    if (c == '$') return true;
    if (c == '\\' && i + 1 < s.size()) {
      if (s[i + 1] == '[' || s[i + 1] == '(') return true;
      if (starts_at(s, i, "\\begin{")) {
        const std::size_t next = read_env_name(s, i + 6, name);
        if (next != std::string_view::npos && is_display_env(name, config.math_environments)) return true;
      }
      i += 2;
      continue;
    }
    ++i;
  }
  return false;
}

ProseCut make_prose_cut(const PaperSource& paper, std::size_t offset, std::string cut_id,
                        const ProseCutConfig& config) {
  const std::string_view text = paper.text;
  ProseCut cut;
  cut.cut_id = std::move(cut_id);
  cut.paper_id = paper.paper_id;
  cut.cut_offset = offset;
  cut.target_y = std::string(head_within(text.substr(offset), config.target_chars));
  cut.context_pred = std::string(tail_before(text, offset, config.context_chars));
  cut.pre2000 = std::string(tail_before(text, offset, config.pre_short));
  cut.pre3000 = std::string(tail_before(text, offset, config.pre_long));
  cut.has_equation_material = has_equation_material(cut.target_y, config);
  return cut;
}

std::vector<ProseCut> extract_prose_cuts(const PaperSource& paper, const ProseCutConfig& config,
                                         std::uint64_t seed, Diagnostics* diag) {
  std::vector<std::size_t> admissible;
  for (std::size_t b : prose_boundaries(paper.text)) {
    if (auto why = prose_cut_rejection(paper, b, config)) {
      if (diag) diag->add(paper.paper_id, b, *why);
      continue;
    }
    admissible.push_back(b);
  }
  if (admissible.size() > config.max_cuts_per_paper) {
    // seeded partial Fisher-Yates, then back to document order
    SeededRng rng(splitmix64(seed ^ fnv1a64(paper.paper_id)));
    for (std::size_t k = 0; k < config.max_cuts_per_paper; ++k) {
      const std::size_t j = k + rng.below(admissible.size() - k);
      std::swap(admissible[k], admissible[j]);
    }
    for (std::size_t k = config.max_cuts_per_paper; k < admissible.size(); ++k) {
      if (diag) diag->add(paper.paper_id, admissible[k], "per-paper-cap");
    }
    admissible.resize(config.max_cuts_per_paper);
    std::sort(admissible.begin(), admissible.end());
  }
  std::vector<ProseCut> cuts;
  cuts.reserve(admissible.size());
  for (std::size_t b : admissible) {
    cuts.push_back(make_prose_cut(paper, b, fmt::format("{}/pr{:02}", paper.paper_id, cuts.size()), config));
  }
  return cuts;
}

std::string extraction_report(const std::vector<std::pair<std::string, std::size_t>>& accepted_per_paper,
                              const Diagnostics& diag) {
  std::map<std::string, std::map<std::string, std::size_t>> rejected;
  for (const auto& d : diag.entries()) ++rejected[d.paper_id][d.reason];
  std::string out = "paper_id\taccepted\trejected\treasons\n";
  std::size_t total_acc = 0;
  std::size_t total_rej = 0;
  std::map<std::string, std::size_t> total_reasons;
  for (const auto& [paper, accepted] : accepted_per_paper) {
    std::size_t n_rej = 0;
    std::string reasons;
    for (const auto& [reason, n] : rejected[paper]) {
      n_rej += n;
      total_reasons[reason] += n;
      if (!reasons.empty()) reasons += ' ';
      reasons += fmt::format("{}={}", reason, n);
    }
    total_acc += accepted;
    total_rej += n_rej;
    out += fmt::format("{}\t{}\t{}\t{}\n", paper, accepted, n_rej, reasons);
  }
  std::string reasons;
  for (const auto& [reason, n] : total_reasons) {
    if (!reasons.empty()) reasons += ' ';
    reasons += fmt::format("{}={}", reason, n);
  }
  out += fmt::format("TOTAL\t{}\t{}\t{}\n", total_acc, total_rej, reasons);
  return out;
}

Json to_json(const EquationCut& c) {
  return Json{{"kind", "equation"},
              {"cut_id", c.cut_id},
              {"paper_id", c.paper_id},
              {"env_name", c.env_name},
              {"eq_start", c.eq_start},
              {"body_start", c.body_start},
              {"body_end", c.body_end},
              {"cut_offset", c.cut_offset},
              {"prefix", c.prefix},
              {"suffix_y", c.suffix_y},
              {"closing_delimiter", c.closing_delimiter},
              {"context_chars", c.context_chars},
              {"budget_b", c.budget_b},
              {"equation_key", c.equation_key}};
}

Json to_json(const ProseCut& c) {
  return Json{{"kind", "prose"},
              {"cut_id", c.cut_id},
              {"paper_id", c.paper_id},
              {"cut_offset", c.cut_offset},
              {"target_y", c.target_y},
              {"context_pred", c.context_pred},
              {"pre2000", c.pre2000},
              {"pre3000", c.pre3000},
              {"has_equation_material", c.has_equation_material}};
}

EquationCut equation_cut_from_json(const Json& j) {
  EquationCut c;
  c.cut_id = j.at("cut_id").get<std::string>();
  c.paper_id = j.at("paper_id").get<std::string>();
  c.env_name = j.at("env_name").get<std::string>();
  c.eq_start = j.at("eq_start").get<std::size_t>();
  c.body_start = j.at("body_start").get<std::size_t>();
  c.body_end = j.at("body_end").get<std::size_t>();
  c.cut_offset = j.at("cut_offset").get<std::size_t>();
  c.prefix = j.at("prefix").get<std::string>();
  c.suffix_y = j.at("suffix_y").get<std::string>();
  c.closing_delimiter = j.at("closing_delimiter").get<std::string>();
  c.context_chars = j.at("context_chars").get<std::string>();
  c.budget_b = j.at("budget_b").get<std::size_t>();
  c.equation_key = j.at("equation_key").get<std::string>();
  return c;
}

ProseCut prose_cut_from_json(const Json& j) {
  ProseCut c;
  c.cut_id = j.at("cut_id").get<std::string>();
  c.paper_id = j.at("paper_id").get<std::string>();
  c.cut_offset = j.at("cut_offset").get<std::size_t>();
  c.target_y = j.at("target_y").get<std::string>();
  c.context_pred = j.at("context_pred").get<std::string>();
  c.pre2000 = j.at("pre2000").get<std::string>();
  c.pre3000 = j.at("pre3000").get<std::string>();
  c.has_equation_material = j.at("has_equation_material").get<bool>();
  return c;
}

}  // namespace liftbench
