#pragma once

// Text helpers shared across the pipeline.
//
// Offsets and lengths everywhere in liftbench count UTF-8 code units of the
// normalized source. Slicing helpers never split a multi-byte sequence.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace liftbench {

bool is_valid_utf8(std::string_view s);

/// Reinterprets Latin-1 bytes as UTF-8.
std::string latin1_to_utf8(std::string_view s);

inline bool is_utf8_continuation(unsigned char c) { return (c & 0xC0) == 0x80; }

/// Largest code-point boundary <= pos.
std::size_t floor_char_boundary(std::string_view s, std::size_t pos);

/// The first `budget` code units of s, shortened so no character is split.
std::string_view head_within(std::string_view s, std::size_t budget);

/// The last `count` code units before `end`, widened backwards to a
/// character boundary when `end - count` falls inside a sequence.
std::string_view tail_before(std::string_view s, std::size_t end, std::size_t count);

/// Number of backslashes immediately preceding pos.
std::size_t preceding_backslashes(std::string_view s, std::size_t pos);

/// True when s[pos] is the start of a TeX comment (an unescaped '%').
bool is_comment_start(std::string_view s, std::size_t pos);

/// Code points of s, used for shuffles and similar character-level edits.
std::vector<std::string_view> split_code_points(std::string_view s);

std::uint64_t fnv1a64(std::string_view s);
std::uint64_t splitmix64(std::uint64_t x);
std::string hex64(std::uint64_t v);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

/// Portable seeded generator (splitmix64 stream). Unlike the standard
/// distributions its draws are identical across platforms.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  /// Uniform integer in [0, n); n must be > 0.
  std::uint64_t below(std::uint64_t n);
  double unit();

 private:
  std::uint64_t state_;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view data);

}  // namespace liftbench
