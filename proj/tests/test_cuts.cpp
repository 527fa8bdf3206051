#include <doctest.h>

#include <set>

#include <fmt/format.h>

#include "liftbench/cuts.hpp"
#include "liftbench/text.hpp"
#include "support.hpp"

using namespace liftbench;
using testsupport::filler;

namespace {

// 141-char body with a single "=" at offset 60; the cut lands at 61, inside
// the middle third [47, 94], leaving an 80-char suffix.
std::string body(int i) {
  std::string left = fmt::format("\\phi_{{{}}} ", i);
  left.resize(60, 'q');
  std::string right = fmt::format(" \\psi_{{{}}} \\chi_{{{}}}", i, i * 7 + 3);
  right.resize(80, 'r');
  return left + "=" + right;
}

std::string equation(int i, const std::string& env = "equation") {
  return "\\begin{" + env + "}" + body(i) + "\\end{" + env + "}";
}

PaperSource paper_with(const std::vector<std::string>& equations, std::size_t lead = 10500) {
  PaperSource p;
  p.paper_id = "fx";
  p.text = filler(lead, 1);
  for (std::size_t i = 0; i < equations.size(); ++i) {
    p.text += "\n" + equations[i] + "\n" + filler(300, 100 + i);
  }
  return p;
}

}  // namespace

TEST_SUITE("cut_extraction") {

TEST_CASE("scan finds a single well-formed environment") {
  const PaperSource p{"p", "\\begin{equation}x=1\\end{equation}", "", {}};
  const auto hits = scan_display_equations(p);
  REQUIRE(hits.size() == 1);
  CHECK(p.text.substr(hits[0].body_start, hits[0].body_end - hits[0].body_start) == "x=1");
  CHECK(hits[0].env_name == "equation");
  CHECK(hits[0].eq_start == 0);
  CHECK(hits[0].closing_delimiter == "\\end{equation}");
  CHECK(hits[0].eq_end == p.text.size());
}

TEST_CASE("unclosed environments are skipped and logged") {
  const PaperSource p{"p", "text \\begin{align}a=b\n\nmore text", "", {}};
  Diagnostics diag;
  CHECK(scan_display_equations(p, {}, &diag).empty());
  CHECK(diag.count("unclosed-environment") == 1);
  // a later well-formed display is still found
  const PaperSource q{"q", "\\begin{align}a=b \\[c=d\\]", "", {}};
  Diagnostics d2;
  const auto hits = scan_display_equations(q, {}, &d2);
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].env_name == "[");
  CHECK(d2.count("unclosed-environment") == 1);
}

TEST_CASE("scan reports environments in document order, outermost only") {
  const std::string text = "a \\begin{equation}1=1\\end{equation} b \\begin{align*}x&=y\\\\z&=w\\end{align*} c"
                           " \\[ \\begin{equation}nested\\end{equation} \\] d \\begin{equation}2=2\\end{equation}"
                           " e \\begin{equation}3=3\\end{equation} % \\begin{equation}in comment\\end{equation}\n";
  const PaperSource p{"p", text, "", {}};
  const auto hits = scan_display_equations(p);
  REQUIRE(hits.size() == 5);
  CHECK(hits[0].env_name == "equation");
  CHECK(hits[1].env_name == "align*");
  CHECK(hits[2].env_name == "[");
  CHECK(hits[3].env_name == "equation");
  CHECK(hits[4].env_name == "equation");
  for (std::size_t i = 1; i < hits.size(); ++i) CHECK(hits[i].eq_start > hits[i - 1].eq_end - 1);
  // three equation envs and one align env, nothing else
  const PaperSource four{"p", "\\begin{equation}a\\end{equation}\\begin{align}b\\end{align}"
                              "\\begin{equation}c\\end{equation}\\begin{equation}d\\end{equation}\\begin{figure}e\\end{figure}",
                         "", {}};
  const auto h4 = scan_display_equations(four);
  REQUIRE(h4.size() == 4);
  CHECK(h4[1].env_name == "align");
}

TEST_CASE("operator sites") {
  CHECK(operator_sites("a=b+c") == std::vector<std::size_t>{2, 4});
  CHECK(operator_sites("a \\le b") == std::vector<std::size_t>{5});
  // \left is not \le, though the bare '<' after it is still an operator
  CHECK(operator_sites("\\left< a \\right>") == std::vector<std::size_t>{6, 16});
  CHECK(operator_sites("\\leftarrow \\in x") == std::vector<std::size_t>{14});
  CHECK(operator_sites("a \\= b \\+ c").empty());
  CHECK(operator_sites("x \xE2\x88\x92 y") == std::vector<std::size_t>{5});
}

TEST_CASE("cut site in the middle third") {
  // L = 14, middle third [14/3, 28/3]: '=' at 4 gives 5 (inside), '+' at 9 gives 10 (outside)
  CHECK(select_cut_site("aaaa=bbbb+cccc", 0) == std::optional<std::size_t>(5));
  CHECK(select_cut_site("aaaa=bbbb+cccc", 12345) == std::optional<std::size_t>(5));
  CHECK_FALSE(select_cut_site("abcdef", 0));
  // only edge operators
  CHECK_FALSE(select_cut_site("=aaaaaaaaaaaaaaaa=", 3));
  // closed bounds: L = 9, site 3 and site 6 both qualify
  const auto s = select_cut_site("ab=de=ghi", 1);
  REQUIRE(s);
  CHECK((*s == 3 || *s == 6));
}

TEST_CASE("cut site choice is seeded and deterministic") {
  const std::string b = "xxxxxxxxxx a=b+c=d+e=f+g=h xxxxxxxxxx";
  std::set<std::size_t> seen;
  for (std::uint64_t seed = 0; seed < 64; ++seed) {
    const auto a = select_cut_site(b, seed);
    REQUIRE(a);
    CHECK(select_cut_site(b, seed) == a);
    seen.insert(*a);
  }
  CHECK(seen.size() > 1);
}

TEST_CASE("a paper with twelve valid equations yields ten cuts") {
  std::vector<std::string> eqs;
  for (int i = 0; i < 12; ++i) eqs.push_back(equation(i));
  const auto p = paper_with(eqs);
  Diagnostics diag;
  const auto cuts = extract_equation_cuts(p, {}, 7, &diag);
  CHECK(cuts.size() == 10);
  CHECK(diag.count("per-paper-cap") == 2);
  CHECK(testsupport::equation_cut_violations(p, cuts).empty());
  for (const auto& c : cuts) CHECK(c.suffix_y.size() == 80);
  CHECK(cuts.front().cut_id == "fx/eq00");
}

TEST_CASE("short suffixes are excluded") {
  std::string left(20, 'a');
  std::string right(30, 'b');
  const auto p = paper_with({"\\begin{equation}" + left + "=" + right + "\\end{equation}"});
  Diagnostics diag;
  CHECK(extract_equation_cuts(p, {}, 0, &diag).empty());
  CHECK(diag.count("suffix-too-short") == 1);
}

TEST_CASE("long suffixes are excluded") {
  const auto p = paper_with({"\\begin{equation}" + std::string(250, 'a') + "=" + std::string(450, 'b') +
                             "\\end{equation}"});
  Diagnostics diag;
  CHECK(extract_equation_cuts(p, {}, 0, &diag).empty());
  CHECK(diag.count("suffix-too-long") == 1);
}

TEST_CASE("suffixes already visible in the context are excluded") {
  const std::string b = body(3);
  const std::string y = b.substr(61);
  PaperSource p = paper_with({equation(3)});
  // plant Y in the prose well inside the 10,000-character window
  p.text.replace(5000, y.size(), y);
  Diagnostics diag;
  CHECK(extract_equation_cuts(p, {}, 0, &diag).empty());
  CHECK(diag.count("verbatim-context") == 1);
  // beyond the window it no longer counts
  PaperSource far = paper_with({equation(3)}, 20000);
  far.text.replace(100, y.size(), y);
  CHECK(extract_equation_cuts(far, {}, 0).size() == 1);
}

TEST_CASE("equations without enough preceding context are skipped") {
  const auto p = paper_with({equation(1)}, 9000);
  Diagnostics diag;
  CHECK(extract_equation_cuts(p, {}, 0, &diag).empty());
  CHECK(diag.count("insufficient-context") == 1);
}

TEST_CASE("repeated equations are cut once") {
  const auto p = paper_with({equation(5), equation(6), equation(5)});
  Diagnostics diag;
  const auto cuts = extract_equation_cuts(p, {}, 0, &diag);
  CHECK(cuts.size() == 2);
  CHECK(diag.count("duplicate-equation") + diag.count("verbatim-context") == 1);
  CHECK(testsupport::equation_cut_violations(p, cuts).empty());
}

TEST_CASE("bracket displays and starred environments are cut") {
  const std::string b = body(9);
  const auto p = paper_with({"\\[" + b + "\\]", equation(10, "align*")});
  const auto cuts = extract_equation_cuts(p, {}, 0);
  REQUIRE(cuts.size() == 2);
  CHECK(cuts[0].env_name == "[");
  CHECK(cuts[0].closing_delimiter == "\\]");
  CHECK(cuts[1].closing_delimiter == "\\end{align*}");
  CHECK(testsupport::equation_cut_violations(p, cuts).empty());
}

TEST_CASE("extraction is a pure function of paper, config and seed") {
  std::vector<std::string> eqs;
  for (int i = 0; i < 6; ++i) {
    // several operators per body so the seed matters
    std::string tail = fmt::format("w_{{{}}}", i);
    tail.resize(60, 'z');
    eqs.push_back("\\begin{equation}" + std::string(50, 'a') + "=b+c=d+e=f+g" + tail + "\\end{equation}");
  }
  const auto p = paper_with(eqs);
  const auto a = extract_equation_cuts(p, {}, 42);
  const auto b = extract_equation_cuts(p, {}, 42);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(to_json(a[i]).dump() == to_json(b[i]).dump());
  bool differs = false;
  for (std::uint64_t seed = 0; seed < 20 && !differs; ++seed) {
    const auto c = extract_equation_cuts(p, {}, seed);
    for (std::size_t i = 0; i < c.size() && i < a.size(); ++i) differs = differs || c[i].cut_offset != a[i].cut_offset;
  }
  CHECK(differs);
}

TEST_CASE("cut json round trip") {
  const auto p = paper_with({equation(1)});
  const auto cuts = extract_equation_cuts(p, {}, 0);
  REQUIRE(cuts.size() == 1);
  const auto back = equation_cut_from_json(to_json(cuts[0]));
  CHECK(to_json(back).dump() == to_json(cuts[0]).dump());
}

TEST_CASE("fixture corpus satisfies every equation-cut invariant") {
  std::size_t total = 0;
  for (const auto& p : testsupport::fixture_papers()) {
    const auto cuts = extract_equation_cuts(p, {}, 7);
    const auto bad = testsupport::equation_cut_violations(p, cuts);
    for (const auto& b : bad) FAIL_CHECK(b);
    for (const auto& c : cuts) CHECK(c.cut_offset <= p.char_count());
    total += cuts.size();
  }
  CHECK(total >= 20);
}

TEST_CASE("prose cuts avoid environments") {
  const std::string text = filler(10500, 3) + "\n\nA\\begin{align}a=b\n\nc=d\\end{align}\n\n" + filler(2500, 4);
  const PaperSource p{"p", text, "", {}};
  const std::size_t inside = text.find("c=d");
  CHECK(*prose_cut_rejection(p, inside) == "inside-environment");
  const std::size_t after = text.find("\\end{align}\n\n") + 13;
  CHECK_FALSE(prose_cut_rejection(p, after));
  CHECK(*prose_cut_rejection(p, 10502 + 1) == "not-paragraph-break");
}

TEST_CASE("equation material detection") {
  CHECK(has_equation_material("The bound follows \\begin{equation}"));
  CHECK(has_equation_material("inline $x$ math"));
  CHECK(has_equation_material("display \\[ x \\]"));
  CHECK_FALSE(has_equation_material("plain prose only, with \\emph{emphasis}"));
  CHECK_FALSE(has_equation_material(std::string(1800, 'a') + "$x$"));
}

TEST_CASE("exactly one admissible boundary gives exactly one cut") {
  const std::string text = filler(12000, 5) + "\n\n" + filler(3000, 6);
  const PaperSource p{"p", text, "", {}};
  const auto cuts = extract_prose_cuts(p, {}, 0);
  REQUIRE(cuts.size() == 1);
  const auto& c = cuts[0];
  CHECK(c.cut_offset == 12002);
  CHECK(c.target_y == text.substr(12002, 2000));
  CHECK(c.pre3000.size() == 3000);
  CHECK(c.pre2000.size() == 2000);
  CHECK(c.pre3000.ends_with(c.pre2000));
  CHECK(text.compare(12002 - 3000, 3000, c.pre3000) == 0);
  CHECK(c.context_pred.size() == 10000);
  CHECK_FALSE(c.has_equation_material);
}

TEST_CASE("prose cap is seeded and keeps document order") {
  const PaperSource p{"p", testsupport::filler_paragraphs(60000, 700, 9), "", {}};
  ProseCutConfig cfg;
  cfg.max_cuts_per_paper = 5;
  Diagnostics diag;
  const auto a = extract_prose_cuts(p, cfg, 1, &diag);
  const auto b = extract_prose_cuts(p, cfg, 1);
  REQUIRE(a.size() == 5);
  CHECK(diag.count("per-paper-cap") > 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].cut_offset == b[i].cut_offset);
    if (i > 0) CHECK(a[i].cut_offset > a[i - 1].cut_offset);
    CHECK_FALSE(prose_cut_rejection(p, a[i].cut_offset, cfg));
  }
}

TEST_CASE("prose invariants on the fixture corpus") {
  std::size_t total = 0;
  for (const auto& p : testsupport::fixture_papers()) {
    for (const auto& c : extract_prose_cuts(p, {}, 11)) {
      CHECK(c.pre3000.ends_with(c.pre2000));
      CHECK(p.text.compare(c.cut_offset - c.pre3000.size(), c.pre3000.size(), c.pre3000) == 0);
      CHECK_FALSE(prose_cut_rejection(p, c.cut_offset));
      CHECK(c.target_y.size() == 2000);
      ++total;
    }
  }
  CHECK(total > 0);
}

}  // TEST_SUITE
