#include "liftbench/jsonl.hpp"

#include <sstream>

#include "liftbench/errors.hpp"
#include "liftbench/text.hpp"

namespace liftbench {

std::vector<Json> read_jsonl(const std::string& path) {
  const std::string data = read_file(path);
  std::vector<Json> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < data.size()) {
    std::size_t eol = data.find('\n', pos);
    if (eol == std::string::npos) eol = data.size();
    ++line_no;
    const std::string_view line(data.data() + pos, eol - pos);
    pos = eol + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back(Json::parse(line));
    } catch (const Json::parse_error& e) {
      throw Error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::string to_jsonl(const std::vector<Json>& records) {
  std::string out;
  for (const auto& r : records) {
    out += r.dump();
    out.push_back('\n');
  }
  return out;
}

JsonlAppender::JsonlAppender(const std::string& path) : out_(path, std::ios::binary | std::ios::app) {
  if (!out_) throw Error("cannot open " + path + " for append");
}

void JsonlAppender::append(const Json& record) {
  const std::string line = record.dump() + "\n";
  std::lock_guard lock(mu_);
  out_.write(line.data(), static_cast<std::streamsize>(line.size()));
  out_.flush();
}

}  // namespace liftbench
