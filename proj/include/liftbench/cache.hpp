#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>

#include "liftbench/jsonl.hpp"

namespace liftbench {

/// Content-addressed store of provider responses.
///
/// Backed by a JSON-lines file, one record per call:
///   {key_hash, kind, request_digest, response_payload, timestamp}
/// Reads take a shared lock, writes an exclusive one. The first record for a
/// key wins, so replays are idempotent.
class ResponseCache {
 public:
  /// In-memory cache.
  ResponseCache() = default;
  /// Loads `path` if it exists and appends new records to it.
  explicit ResponseCache(const std::string& path);

  std::optional<Json> get(const std::string& key_hash) const;
  /// Returns false when the key was already present (nothing written).
  bool put(const std::string& key_hash, const std::string& kind, const std::string& request_digest,
           const Json& response_payload);
  std::size_t size() const;

 private:
  mutable std::shared_mutex mu_;
  std::map<std::string, Json> entries_;
  std::unique_ptr<JsonlAppender> log_;
};

/// sha256 over `kind` and the canonical serialization of `material`.
std::string cache_key(const std::string& kind, const Json& material);

}  // namespace liftbench
