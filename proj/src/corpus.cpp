#include "liftbench/corpus.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <set>

#include "liftbench/errors.hpp"
#include "liftbench/jsonl.hpp"
#include "liftbench/text.hpp"

namespace liftbench {

namespace {

bool ends_with_tex(std::string_view name) {
  if (name.size() < 4) return false;
  std::string ext(name.substr(name.size() - 4));
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".tex";
}

std::string normalize_member_text(std::string raw) {
  if (raw.starts_with("\xEF\xBB\xBF")) raw.erase(0, 3);
  if (!is_valid_utf8(raw)) raw = latin1_to_utf8(raw);
  std::string out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == '\r') {
      out.push_back('\n');
      if (i + 1 < raw.size() && raw[i + 1] == '\n') ++i;
    } else {
      out.push_back(raw[i]);
    }
  }
  return out;
}

std::string normalize_path(std::string p) {
  std::filesystem::path path(p);
  return path.lexically_normal().generic_string();
}

const ArchiveMember* find_member(const std::vector<ArchiveMember>& members, const std::string& name) {
  for (const auto& m : members) {
    if (m.name == name) return &m;
  }
  return nullptr;
}

class IncludeInliner {
 public:
  IncludeInliner(const std::vector<ArchiveMember>& members, std::string paper_id, Diagnostics* diag)
      : members_(members), paper_id_(std::move(paper_id)), diag_(diag) {}

  std::string run(const std::string& text, const std::string& base_dir, int depth) {
    if (depth > kMaxIncludeDepth) {
      throw CorruptArchive("include nesting deeper than " + std::to_string(kMaxIncludeDepth) +
                           " in " + paper_id_);
    }
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
      if (is_comment_start(text, i)) {
        const std::size_t eol = text.find('\n', i);
        const std::size_t stop = eol == std::string::npos ? text.size() : eol;
        out.append(text, i, stop - i);
        i = stop;
        continue;
      }
      std::size_t name_begin = 0;
      std::size_t name_end = 0;
      if (text[i] == '\\' && preceding_backslashes(text, i) % 2 == 0 &&
          match_include(text, i, name_begin, name_end)) {
        const std::string target = text.substr(name_begin, name_end - name_begin);
        // nested includes resolve against the root's directory, as in LaTeX
        if (const ArchiveMember* m = resolve(target, base_dir)) {
          out += run(normalize_member_text(m->data), base_dir, depth + 1);
        } else {
          spdlog::debug("{}: unresolved include '{}' at {}", paper_id_, target, i);
          if (diag_) diag_->add(paper_id_, i, "unresolved-include", target);
        }
        i = name_end + 1;
        continue;
      }
      out.push_back(text[i++]);
    }
    return out;
  }

  static bool match_include(const std::string& text, std::size_t i, std::size_t& name_begin,
                            std::size_t& name_end) {
    std::size_t j = i + 1;
    std::size_t k = j;
    while (k < text.size() && std::isalpha(static_cast<unsigned char>(text[k]))) ++k;
    const std::string_view cmd(text.data() + j, k - j);
    if (cmd != "input" && cmd != "include") return false;
    while (k < text.size() && (text[k] == ' ' || text[k] == '\t')) ++k;
    if (k >= text.size() || text[k] != '{') return false;
    const std::size_t close = text.find('}', k + 1);
    if (close == std::string::npos) return false;
    const std::size_t nl = text.find('\n', k + 1);
    if (nl != std::string::npos && nl < close) return false;
    name_begin = k + 1;
    name_end = close;
    return true;
  }

 private:
  const ArchiveMember* resolve(std::string target, const std::string& base_dir) const {
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    target = trim(target);
    if (target.empty()) return nullptr;
    std::vector<std::string> candidates;
    for (const std::string& dir : {base_dir, std::string()}) {
      const std::string joined = dir.empty() ? target : dir + "/" + target;
      candidates.push_back(normalize_path(joined));
      candidates.push_back(normalize_path(joined + ".tex"));
    }
    for (const auto& c : candidates) {
      if (const ArchiveMember* m = find_member(members_, c)) return m;
    }
    return nullptr;
  }

  const std::vector<ArchiveMember>& members_;
  std::string paper_id_;
  Diagnostics* diag_;
};

// Members named by an \input or \include anywhere in the archive, with and
// without the .tex extension added.
std::set<std::string> referenced_members(const std::vector<ArchiveMember>& members) {
  std::set<std::string> out;
  for (const auto& m : members) {
    if (!ends_with_tex(m.name)) continue;
    const std::string& t = m.data;
    for (std::size_t i = t.find('\\'); i != std::string::npos; i = t.find('\\', i + 1)) {
      std::size_t b = 0;
      std::size_t e = 0;
      if (!IncludeInliner::match_include(t, i, b, e)) continue;
      const std::string target = normalize_path(t.substr(b, e - b));
      out.insert(target);
      out.insert(target + ".tex");
    }
  }
  return out;
}

}  // namespace

std::string resolve_main_document(const std::vector<ArchiveMember>& members) {
  const ArchiveMember* best = nullptr;
  for (const auto& m : members) {
    if (!ends_with_tex(m.name)) continue;
    if (m.data.find("\\begin{document}") == std::string::npos) continue;
    if (best == nullptr || m.data.size() > best->data.size() ||
        (m.data.size() == best->data.size() && m.name < best->name)) {
      best = &m;
    }
  }
  if (best == nullptr) throw NoRootCandidate("no .tex member contains \\begin{document}");
  return best->name;
}

std::string inline_includes(const std::string& root_name, const std::vector<ArchiveMember>& members,
                            const std::string& paper_id, Diagnostics* diag) {
  const ArchiveMember* root = find_member(members, root_name);
  if (root == nullptr) throw NoTexFound("root member " + root_name + " not in archive");
  const auto base_dir = std::filesystem::path(root_name).parent_path().generic_string();
  IncludeInliner inliner(members, paper_id, diag);
  return inliner.run(normalize_member_text(root->data), base_dir, 0);
}

PaperSource load_archive(std::span<const char> archive, const std::string& paper_id,
                         const std::string& origin, Diagnostics* diag) {
  std::vector<ArchiveMember> members;
  auto as_single = [&](std::string data) {
    if (data.find('\0') != std::string::npos) {
      throw CorruptArchive(paper_id + ": input is neither a tar archive nor TeX text");
    }
    members.push_back({paper_id + ".tex", std::move(data)});
  };

  if (is_gzip(archive)) {
    std::string inflated = gunzip(archive);
    if (is_tar(inflated)) {
      members = read_tar(inflated);
    } else {
      as_single(std::move(inflated));
    }
  } else if (is_tar(archive)) {
    members = read_tar(archive);
  } else {
    as_single(std::string(archive.data(), archive.size()));
  }

  std::vector<const ArchiveMember*> tex;
  for (const auto& m : members) {
    if (ends_with_tex(m.name)) tex.push_back(&m);
  }
  if (tex.empty()) throw NoTexFound(paper_id + ": archive has no .tex member");

  std::string root;
  if (tex.size() == 1) {
    root = tex.front()->name;
  } else {
    try {
      root = resolve_main_document(members);
    } catch (const NoRootCandidate&) {
      // no \begin{document}: fall back to the one member nothing includes
      const auto referenced = referenced_members(members);
      std::vector<std::string> roots;
      for (const auto* m : tex) {
        if (!referenced.contains(m->name)) roots.push_back(m->name);
      }
      if (roots.size() != 1) throw;
      root = roots.front();
    }
  }
  PaperSource paper;
  paper.paper_id = paper_id;
  paper.origin = origin;
  paper.text = inline_includes(root, members, paper_id, diag);
  return paper;
}

std::optional<std::string> filter_rejection(const PaperSource& paper, const IngestFilter& filter) {
  if (filter.min_pages > 0 && filter.chars_per_page > 0) {
    const double pages = static_cast<double>(paper.char_count()) / static_cast<double>(filter.chars_per_page);
    if (pages < filter.min_pages) return "too-short";
  }
  auto lower = [](std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
  };
  if (!filter.keywords.empty()) {
    const std::string hay = lower(paper.text);
    const bool hit = std::any_of(filter.keywords.begin(), filter.keywords.end(),
                                 [&](const std::string& k) { return hay.find(lower(k)) != std::string::npos; });
    if (!hit) return "no-keyword";
  }
  if (!filter.categories.empty()) {
    const bool hit = std::any_of(filter.categories.begin(), filter.categories.end(), [&](const std::string& c) {
      return std::find(paper.category_tags.begin(), paper.category_tags.end(), c) != paper.category_tags.end();
    });
    if (!hit) return "category";
  }
  return std::nullopt;
}

std::string paper_id_from_path(const std::string& path) {
  std::string base = std::filesystem::path(path).filename().string();
  // URLs: drop any query string
  if (const auto q = base.find('?'); q != std::string::npos) base.erase(q);
  for (const char* ext : {".tar.gz", ".tgz", ".tex.gz", ".tar", ".tex", ".gz"}) {
    const std::string_view e(ext);
    if (base.size() > e.size() && base.ends_with(e)) return base.substr(0, base.size() - e.size());
  }
  return base;
}

void write_corpus_jsonl(const std::string& path, const std::vector<PaperSource>& papers,
                        const std::string& run_id) {
  std::vector<Json> records;
  records.reserve(papers.size());
  for (const auto& p : papers) {
    records.push_back({{"paper_id", p.paper_id}, {"text", p.text}, {"origin", p.origin}, {"run_id", run_id}});
  }
  write_file(path, to_jsonl(records));
}

std::vector<PaperSource> read_corpus_jsonl(const std::string& path) {
  std::vector<PaperSource> out;
  for (const auto& j : read_jsonl(path)) {
    PaperSource p;
    p.paper_id = j.at("paper_id").get<std::string>();
    p.text = j.at("text").get<std::string>();
    p.origin = j.value("origin", std::string());
    if (j.contains("category_tags")) p.category_tags = j.at("category_tags").get<std::vector<std::string>>();
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace liftbench
