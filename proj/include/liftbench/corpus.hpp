#pragma once

// Corpus ingest: TeX source archives -> one normalized character stream per
// paper. No macro expansion happens here; the text is raw TeX with
// \input/\include targets inlined and comments kept verbatim.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "liftbench/archive.hpp"
#include "liftbench/diagnostics.hpp"

namespace liftbench {

struct PaperSource {
  std::string paper_id;
  std::string text;
  std::string origin;
  std::vector<std::string> category_tags;

  std::size_t char_count() const { return text.size(); }
};

inline constexpr int kMaxIncludeDepth = 8;

/// Loads a gzip-compressed tar, a plain tar, a gzipped single TeX file, or
/// a bare TeX file. Throws CorruptArchive or NoTexFound. A multi-file archive
/// with no \begin{document} uses the single .tex member no other member
/// includes, and throws NoRootCandidate when that is ambiguous.
PaperSource load_archive(std::span<const char> archive, const std::string& paper_id,
                         const std::string& origin = {}, Diagnostics* diag = nullptr);

/// Picks the root among (name, text) members: the member containing
/// \begin{document}; if several, the largest; ties go to the smaller name.
std::string resolve_main_document(const std::vector<ArchiveMember>& members);

/// Inlines \input{...} and \include{...} recursively against `members`.
/// Unresolvable targets become empty strings and are logged.
std::string inline_includes(const std::string& root_name, const std::vector<ArchiveMember>& members,
                            const std::string& paper_id, Diagnostics* diag = nullptr);

/// Source filters applied at ingest. Nothing is filtered by default.
struct IngestFilter {
  double min_pages = 0;
  std::size_t chars_per_page = 3000;  // page estimate = char_count / chars_per_page
  std::vector<std::string> keywords;  // any-of, case-insensitive; empty = no filter
  std::vector<std::string> categories;  // any-of against category_tags
};

/// Empty when the paper passes, otherwise the reason it was dropped.
std::optional<std::string> filter_rejection(const PaperSource& paper, const IngestFilter& filter);

/// Derives a paper id from an archive path: the basename without
/// .tar.gz / .tgz / .tex.gz / .tar / .tex / .gz.
std::string paper_id_from_path(const std::string& path);

using Fetcher = std::function<std::string(const std::string& url)>;

// JSON-lines corpus file: one {paper_id, text, origin} object per line.
void write_corpus_jsonl(const std::string& path, const std::vector<PaperSource>& papers,
                        const std::string& run_id);
std::vector<PaperSource> read_corpus_jsonl(const std::string& path);

}  // namespace liftbench
