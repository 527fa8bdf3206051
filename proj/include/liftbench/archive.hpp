#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace liftbench {

struct ArchiveMember {
  std::string name;
  std::string data;
};

bool is_gzip(std::span<const char> bytes);
bool is_tar(std::span<const char> bytes);

/// Inflates a gzip stream (concatenated members allowed). Throws CorruptArchive.
std::string gunzip(std::span<const char> bytes);

/// Regular-file members of a ustar/GNU tar image, in archive order.
/// Directory entries and links are skipped. Throws CorruptArchive.
std::vector<ArchiveMember> read_tar(std::span<const char> bytes);

}  // namespace liftbench
