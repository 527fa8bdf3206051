#pragma once

#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"

namespace liftbench {

using Json = nlohmann::json;

std::vector<Json> read_jsonl(const std::string& path);

/// Serializes one object per line. Keys are emitted in sorted order, so the
/// same records always produce the same bytes.
std::string to_jsonl(const std::vector<Json>& records);

class JsonlAppender {
 public:
  explicit JsonlAppender(const std::string& path);
  void append(const Json& record);

 private:
  std::mutex mu_;
  std::ofstream out_;
};

}  // namespace liftbench
