#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace liftbench {

/// A skipped or rejected item, recorded instead of raising.
struct Diagnostic {
  std::string paper_id;
  std::size_t offset = 0;
  std::string reason;  // stable machine-readable tag, e.g. "verbatim-context"
  std::string detail;
};

class Diagnostics {
 public:
  void add(std::string paper_id, std::size_t offset, std::string reason, std::string detail = {});

  const std::vector<Diagnostic>& entries() const { return entries_; }
  std::size_t count(const std::string& reason) const;
  /// reason -> count, ordered by reason.
  std::map<std::string, std::size_t> tally() const;
  void clear() { entries_.clear(); }

 private:
  std::vector<Diagnostic> entries_;
};

}  // namespace liftbench
