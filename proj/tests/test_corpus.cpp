#include <doctest.h>

#include <filesystem>

#include "liftbench/archive.hpp"
#include "liftbench/corpus.hpp"
#include "liftbench/errors.hpp"
#include "liftbench/text.hpp"
#include "support.hpp"

using namespace liftbench;
using testsupport::make_tar_gz;

namespace {

PaperSource load(const std::string& bytes, Diagnostics* diag = nullptr) {
  return load_archive(std::span<const char>(bytes.data(), bytes.size()), "paper", "", diag);
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("single-file archive is the identity") {
  CHECK(load(make_tar_gz({{"a.tex", "x"}})).text == "x");
  CHECK(load("x").text == "x");
  CHECK(load(testsupport::gzip_bytes("x")).text == "x");
  const auto p = load("hello");
  CHECK(p.char_count() == 5);
  CHECK(p.paper_id == "paper");
}

TEST_CASE("includes are inlined") {
  CHECK(load(make_tar_gz({{"main.tex", "A\\input{b}C"}, {"b.tex", "B"}})).text == "ABC");
  const auto doc = load(make_tar_gz({{"main.tex", "\\begin{document}A\\include{sec/one}Z\\end{document}"},
                                     {"sec/one.tex", "1\\input{sec/two}"},
                                     {"sec/two.tex", "2"}}));
  CHECK(doc.text == "\\begin{document}A12Z\\end{document}");
}

TEST_CASE("unresolvable includes become empty and are logged") {
  Diagnostics diag;
  const auto p = load(make_tar_gz({{"main.tex", "\\begin{document}A\\input{missing}B\\end{document}"},
                                   {"other.tex", "unused"}}),
                      &diag);
  CHECK(p.text == "\\begin{document}AB\\end{document}");
  CHECK(diag.count("unresolved-include") == 1);
}

TEST_CASE("includes inside comments and escaped backslashes are left alone") {
  const std::string src = "\\begin{document}% \\input{b}\nA\\\\input{b}\\end{document}";
  const auto p = load(make_tar_gz({{"main.tex", src}, {"b.tex", "B"}}));
  CHECK(p.text == src);
}

TEST_CASE("inlining is idempotent") {
  const auto once = load(make_tar_gz({{"main.tex", "\\begin{document}A\\input{b}C\\end{document}"},
                                      {"b.tex", "B\n% \\input{c}\n"},
                                      {"c.tex", "never"}}));
  const auto twice = load(make_tar_gz({{"main.tex", once.text}}));
  CHECK(twice.text == once.text);
}

TEST_CASE("deep include chains are rejected") {
  std::vector<std::pair<std::string, std::string>> members{{"main.tex", "\\begin{document}\\input{f0}"}};
  for (int i = 0; i < 12; ++i) {
    members.push_back({"f" + std::to_string(i) + ".tex", "\\input{f" + std::to_string(i + 1) + "}"});
  }
  CHECK_THROWS_AS(load(make_tar_gz(members)), CorruptArchive);
  // self-inclusion is the same thing
  CHECK_THROWS_AS(load(make_tar_gz({{"main.tex", "\\begin{document}\\input{main}"}})), CorruptArchive);
}

TEST_CASE("archives without TeX and broken archives") {
  CHECK_THROWS_AS(load(make_tar_gz({{"readme.txt", "hi"}})), NoTexFound);
  std::string gz = make_tar_gz({{"a.tex", "x"}});
  gz.resize(gz.size() / 2);
  CHECK_THROWS_AS(load(gz), CorruptArchive);
  CHECK_THROWS_AS(load(std::string("\x1f\x8b garbage", 10)), CorruptArchive);
  CHECK_THROWS_AS(load(std::string("bin\0ary", 7)), CorruptArchive);
}

TEST_CASE("ambiguous roots without a document marker") {
  CHECK_THROWS_AS(load(make_tar_gz({{"a.tex", "one"}, {"b.tex", "two"}})), NoRootCandidate);
}

TEST_CASE("main document resolution") {
  CHECK(resolve_main_document({{"a.tex", "\\begin{document}x\\end{document}"}}) == "a.tex");
  const std::string small = "\\begin{document}";  // 16 chars
  CHECK(resolve_main_document({{"small.tex", small + "0123"}, {"large.tex", small + "0123456789abcd"}}) ==
        "large.tex");
  CHECK(resolve_main_document({{"b.tex", small}, {"a.tex", small}}) == "a.tex");
  CHECK(resolve_main_document({{"x.tex", "no marker"}, {"y.tex", small}}) == "y.tex");
  CHECK_THROWS_AS(resolve_main_document({{"x.tex", "no marker"}}), NoRootCandidate);
  // a marker in a non-TeX member does not count
  CHECK_THROWS_AS(resolve_main_document({{"x.sty", small}}), NoRootCandidate);
}

TEST_CASE("text is normalized before offsets exist") {
  CHECK(load("\xEF\xBB\xBF" "a\r\nb\rc").text == "a\nb\nc");
  // Latin-1 e-acute becomes its UTF-8 form
  CHECK(load("caf\xE9").text == "caf\xC3\xA9");
  CHECK(load("caf\xC3\xA9").text == "caf\xC3\xA9");
}

TEST_CASE("tar reader sees members in order and skips directories") {
  const std::string gz = make_tar_gz({{"a.tex", "1"}, {"b/c.tex", std::string(1000, 'q')}});
  const std::string tar = gunzip(std::span<const char>(gz.data(), gz.size()));
  CHECK(is_tar(tar));
  const auto members = read_tar(tar);
  REQUIRE(members.size() == 2);
  CHECK(members[0].name == "a.tex");
  CHECK(members[1].name == "b/c.tex");
  CHECK(members[1].data.size() == 1000);
}

TEST_CASE("paper ids come from file names") {
  CHECK(paper_id_from_path("/x/2401.01234.tar.gz") == "2401.01234");
  CHECK(paper_id_from_path("a/b.tex") == "b");
  CHECK(paper_id_from_path("a/b.tex.gz") == "b");
  CHECK(paper_id_from_path("https://arxiv.org/e-print/2401.01234?x=1") == "2401.01234");
}

TEST_CASE("ingest filters") {
  PaperSource p{"p", std::string(30000, 'a') + " Quantum ", "", {"hep-th"}};
  CHECK_FALSE(filter_rejection(p, {}));
  IngestFilter f;
  f.min_pages = 25;
  CHECK(*filter_rejection(p, f) == "too-short");
  f.min_pages = 5;
  f.keywords = {"quantum"};
  CHECK_FALSE(filter_rejection(p, f));
  f.keywords = {"gravity"};
  CHECK(*filter_rejection(p, f) == "no-keyword");
  f.keywords.clear();
  f.categories = {"math.PR"};
  CHECK(*filter_rejection(p, f) == "category");
}

TEST_CASE("corpus file round trip") {
  const std::string dir = testsupport::scratch_dir("corpus_roundtrip");
  const std::vector<PaperSource> papers{{"p1", "one\n\"two\"\\", "o1", {}}, {"p2", "caf\xC3\xA9", "o2", {}}};
  write_corpus_jsonl(dir + "/corpus.jsonl", papers, "run");
  const auto back = read_corpus_jsonl(dir + "/corpus.jsonl");
  REQUIRE(back.size() == 2);
  CHECK(back[0].text == papers[0].text);
  CHECK(back[1].text == papers[1].text);
  CHECK(back[1].origin == "o2");
}

TEST_CASE("committed fixture archives all load") {
  namespace fs = std::filesystem;
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(testsupport::fixtures_dir() + "/papers")) {
    const std::string bytes = read_file(e.path().string());
    const auto p = load_archive(std::span<const char>(bytes.data(), bytes.size()),
                                paper_id_from_path(e.path().string()));
    CHECK(p.char_count() > 20000);
    ++n;
  }
  CHECK(n >= 5);
}

}  // TEST_SUITE
