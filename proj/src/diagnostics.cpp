#include "liftbench/diagnostics.hpp"

namespace liftbench {

void Diagnostics::add(std::string paper_id, std::size_t offset, std::string reason, std::string detail) {
  entries_.push_back({std::move(paper_id), offset, std::move(reason), std::move(detail)});
}

std::size_t Diagnostics::count(const std::string& reason) const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.reason == reason ? 1 : 0;
  return n;
}

std::map<std::string, std::size_t> Diagnostics::tally() const {
  std::map<std::string, std::size_t> t;
  for (const auto& e : entries_) ++t[e.reason];
  return t;
}

}  // namespace liftbench
