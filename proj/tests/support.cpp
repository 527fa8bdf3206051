#include "support.hpp"

#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <map>
#include <stdexcept>

#include <fmt/format.h>

#include "liftbench/scaffold.hpp"
#include "liftbench/text.hpp"

namespace testsupport {

namespace fs = std::filesystem;

std::string fixtures_dir() { return LIFTBENCH_TEST_FIXTURES; }
std::string golden_dir() { return LIFTBENCH_TEST_GOLDEN; }

std::string scratch_dir(const std::string& name) {
  const fs::path p = fs::path(LIFTBENCH_TEST_SCRATCH) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

namespace {

const char* const kWords[] = {"the",   "state",  "of",    "a",      "local",  "kernel", "bound",
                              "which", "we",     "study", "here",   "is",     "then",   "given",
                              "by",    "its",    "free",  "energy", "and",    "mode",   "shows",
                              "that",  "flow",   "has",   "no",     "simple", "form",   "in"};

}  // namespace

std::string filler(std::size_t n, std::uint64_t seed) {
  liftbench::SeededRng rng(seed);
  std::string out;
  while (out.size() < n) {
    out += kWords[rng.below(std::size(kWords))];
    out += rng.below(9) == 0 ? ". " : " ";
  }
  out.resize(n);
  return out;
}

std::string filler_paragraphs(std::size_t n, std::size_t paragraph_len, std::uint64_t seed) {
  std::string out;
  std::uint64_t k = 0;
  while (out.size() < n) {
    if (!out.empty()) out += "\n\n";
    out += filler(paragraph_len, seed + k++);
  }
  out.resize(n);
  // never end on half a separator
  while (!out.empty() && out.back() == '\n') out.back() = 'x';
  return out;
}

std::string gzip_bytes(const std::string& data) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_BEST_COMPRESSION, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
    throw std::runtime_error("deflateInit2 failed");
  }
  std::string out(deflateBound(&zs, data.size()) + 64, '\0');
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  zs.avail_in = static_cast<uInt>(data.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw std::runtime_error("deflate failed");
  out.resize(zs.total_out);
  return out;
}

std::string make_tar_gz(const std::vector<std::pair<std::string, std::string>>& members) {
  std::string tar;
  for (const auto& [name, data] : members) {
    char h[512];
    std::memset(h, 0, sizeof h);
    std::snprintf(h, 100, "%s", name.c_str());
    std::snprintf(h + 100, 8, "%07o", 0644);
    std::snprintf(h + 108, 8, "%07o", 0);
    std::snprintf(h + 116, 8, "%07o", 0);
    std::snprintf(h + 124, 12, "%011llo", static_cast<unsigned long long>(data.size()));
    std::snprintf(h + 136, 12, "%011o", 0);
    h[156] = '0';
    std::memcpy(h + 257, "ustar", 6);
    std::memcpy(h + 263, "00", 2);
    std::memset(h + 148, ' ', 8);
    unsigned sum = 0;
    for (unsigned char c : h) sum += c;
    std::snprintf(h + 148, 8, "%06o", sum);
    h[155] = ' ';
    tar.append(h, 512);
    tar += data;
    tar.append((512 - data.size() % 512) % 512, '\0');
  }
  tar.append(1024, '\0');
  return gzip_bytes(tar);
}

double cluster_bootstrap_se(std::span<const liftbench::ClusteredValue> values, int resamples, std::uint64_t seed) {
  std::map<std::string, std::vector<double>> by_paper;
  for (const auto& v : values) by_paper[v.paper_id].push_back(v.x);
  std::vector<std::vector<double>> clusters;
  for (auto& [_, xs] : by_paper) clusters.push_back(std::move(xs));

  liftbench::SeededRng rng(seed);
  std::vector<double> means;
  means.reserve(resamples);
  for (int r = 0; r < resamples; ++r) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      const auto& pick = clusters[rng.below(clusters.size())];
      for (double x : pick) sum += x;
      n += pick.size();
    }
    means.push_back(sum / static_cast<double>(n));
  }
  double mu = 0.0;
  for (double m : means) mu += m;
  mu /= static_cast<double>(means.size());
  double ss = 0.0;
  for (double m : means) ss += (m - mu) * (m - mu);
  return std::sqrt(ss / static_cast<double>(means.size() - 1));
}

std::vector<std::string> equation_cut_violations(const liftbench::PaperSource& paper,
                                                 const std::vector<liftbench::EquationCut>& cuts,
                                                 const liftbench::EquationCutConfig& config) {
  std::vector<std::string> bad;
  auto fail = [&](const liftbench::EquationCut& c, const std::string& what) { bad.push_back(c.cut_id + ": " + what); };
  std::map<std::string, int> keys;
  std::map<std::size_t, int> equations;
  std::map<std::string, int> per_paper;
  const std::string& text = paper.text;
  for (const auto& c : cuts) {
    if (c.paper_id != paper.paper_id) fail(c, "paper id");
    ++keys[c.equation_key];
    ++equations[c.eq_start];
    ++per_paper[c.paper_id];
    if (c.suffix_y.size() < 50 || c.suffix_y.size() > 400) fail(c, fmt::format("|Y| = {}", c.suffix_y.size()));
    if (c.context_chars.size() != 10000) fail(c, fmt::format("context {} chars", c.context_chars.size()));
    if (c.eq_start < 10000 || text.compare(c.eq_start - 10000, 10000, c.context_chars) != 0) {
      fail(c, "context is not the 10,000 characters before the equation");
    }
    if (!(c.eq_start <= c.body_start && c.body_start <= c.cut_offset && c.cut_offset <= c.body_end &&
          c.body_end <= text.size())) {
      fail(c, "offsets out of order");
      continue;
    }
    const std::string body = text.substr(c.body_start, c.body_end - c.body_start);
    if (c.prefix + c.suffix_y != body) fail(c, "prefix + suffix does not rebuild the body");
    if (text.compare(c.body_start, c.prefix.size(), c.prefix) != 0) fail(c, "prefix not at body start");
    const std::size_t len = c.body_end - c.body_start;
    const std::size_t rel = c.cut_offset - c.body_start;
    // closed middle third, checked in doubles as an independent formulation
    if (static_cast<double>(rel) < len / 3.0 || static_cast<double>(rel) > 2.0 * len / 3.0) {
      fail(c, fmt::format("cut at {} of {} is outside the middle third", rel, len));
    }
    bool op = false;
    for (const auto& sym : config.operator_symbols) op = op || (!sym.empty() && c.prefix.ends_with(sym));
    for (const auto& cmd : config.operator_commands) {
      const bool word_end = c.suffix_y.empty() || !std::isalpha(static_cast<unsigned char>(c.suffix_y[0]));
      op = op || (c.prefix.ends_with("\\" + cmd) && word_end);
    }
    if (!op) fail(c, "cut does not follow an operator");
    if (c.context_chars.find(c.suffix_y) != std::string::npos) fail(c, "suffix appears verbatim in context");
    if (c.budget_b != c.suffix_y.size() + 40) fail(c, "budget is not |Y| + 40");
    if (text.compare(c.body_end, c.closing_delimiter.size(), c.closing_delimiter) != 0) {
      fail(c, "closing delimiter not at body end");
    }
    const std::string open = c.opening_delimiter();
    if (text.compare(c.eq_start, open.size(), open) != 0 || c.eq_start + open.size() != c.body_start) {
      fail(c, "opening delimiter not at equation start");
    }
  }
  for (const auto& [k, n] : keys) {
    if (n > 1) bad.push_back("duplicate equation key " + k);
  }
  for (const auto& [e, n] : equations) {
    if (n > 1) bad.push_back(fmt::format("{} cuts from the equation at {}", n, e));
  }
  for (const auto& [p, n] : per_paper) {
    if (n > 10) bad.push_back(fmt::format("{} cuts from paper {}", n, p));
  }
  return bad;
}

std::vector<std::string> scaffold_violations(const liftbench::PaperSource& paper, const liftbench::EquationCut& cut) {
  using liftbench::ScoringCondition;
  std::vector<std::string> bad;
  const std::string& text = paper.text;
  const std::size_t eq_end = cut.body_end + cut.closing_delimiter.size();
  const std::string original = text.substr(cut.eq_start, eq_end - cut.eq_start);
  const std::string target = cut.suffix_y + cut.closing_delimiter;

  const auto truth = build_scorer_prompt_equation(cut, ScoringCondition::true_suffix(cut.suffix_y));
  if ((truth.prompt_text + truth.target_text).find(original) == std::string::npos ||
      truth.prompt_text.find(original) == std::string::npos) {
    bad.push_back(cut.cut_id + ": true-suffix scaffold does not contain the equation");
  }
  const std::vector<ScoringCondition> conds{
      ScoringCondition::empty_scaffold(), ScoringCondition::same_budget(), ScoringCondition::triple_budget(),
      ScoringCondition::true_suffix(cut.suffix_y), ScoringCondition::forecast("x = y", "test/model:none"),
      ScoringCondition::forecast("", "test/empty:none")};
  for (const auto& cond : conds) {
    const auto sp = build_scorer_prompt_equation(cut, cond);
    if (sp.target_text != target) bad.push_back(cut.cut_id + ": target differs under " + cond.label);
    if (sp.prompt_char_len != sp.prompt_text.size()) bad.push_back(cut.cut_id + ": prompt length under " + cond.label);
  }
  const std::size_t b = cut.suffix_y.size() + 40;
  const auto same = build_scorer_prompt_equation(cut, ScoringCondition::same_budget());
  if (cut.eq_start < b || same.prompt_text != text.substr(cut.eq_start - b, cut.cut_offset - (cut.eq_start - b))) {
    bad.push_back(cut.cut_id + ": same-budget prompt is not the B source characters before the equation + prefix");
  }
  const auto triple = build_scorer_prompt_equation(cut, ScoringCondition::triple_budget());
  if (cut.eq_start < 3 * b ||
      triple.prompt_text != text.substr(cut.eq_start - 3 * b, cut.cut_offset - (cut.eq_start - 3 * b))) {
    bad.push_back(cut.cut_id + ": triple-budget prompt is not 3B source characters + prefix");
  }
  return bad;
}

std::vector<liftbench::PaperSource> fixture_papers() {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(fixtures_dir() + "/papers")) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<liftbench::PaperSource> out;
  for (const auto& f : files) {
    const std::string bytes = liftbench::read_file(f.string());
    out.push_back(liftbench::load_archive(std::span<const char>(bytes.data(), bytes.size()),
                                          liftbench::paper_id_from_path(f.string()), f.string()));
  }
  return out;
}

liftbench::RunConfig fixture_config(const std::string& fixture_name, const std::string& out_dir) {
  const std::string path = fixtures_dir() + "/" + fixture_name;
  liftbench::Json j = liftbench::read_config_json(path);
  j["output_dir"] = out_dir;
  return liftbench::config_from_json(j, fixtures_dir());
}

}  // namespace testsupport
