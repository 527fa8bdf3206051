#include "liftbench/cache.hpp"

#include <chrono>
#include <filesystem>
#include <mutex>

#include <fmt/chrono.h>

#include "liftbench/text.hpp"

namespace liftbench {

ResponseCache::ResponseCache(const std::string& path) {
  if (std::filesystem::exists(path)) {
    for (auto& rec : read_jsonl(path)) {
      const std::string key = rec.at("key_hash").get<std::string>();
      entries_.try_emplace(key, std::move(rec.at("response_payload")));
    }
  }
  log_ = std::make_unique<JsonlAppender>(path);
}

std::optional<Json> ResponseCache::get(const std::string& key_hash) const {
  std::shared_lock lock(mu_);
  const auto it = entries_.find(key_hash);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

bool ResponseCache::put(const std::string& key_hash, const std::string& kind, const std::string& request_digest,
                        const Json& response_payload) {
  std::unique_lock lock(mu_);
  if (!entries_.try_emplace(key_hash, response_payload).second) return false;
  if (log_) {
    const auto now = std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
    log_->append(Json{{"key_hash", key_hash},
                      {"kind", kind},
                      {"request_digest", request_digest},
                      {"response_payload", response_payload},
                      {"timestamp", fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(now)))}});
  }
  return true;
}

std::size_t ResponseCache::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

std::string cache_key(const std::string& kind, const Json& material) {
  std::string blob = kind;
  blob.push_back('\0');
  blob += material.dump();
  return sha256_hex(blob);
}

}  // namespace liftbench
