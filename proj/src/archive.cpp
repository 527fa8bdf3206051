#include "liftbench/archive.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstring>

#include "liftbench/errors.hpp"

namespace liftbench {

namespace {

constexpr std::size_t kBlock = 512;

std::uint64_t parse_octal(std::string_view field) {
  std::uint64_t v = 0;
  bool any = false;
  for (char c : field) {
    if (c == '\0' || c == ' ') {
      if (any) break;
      continue;
    }
    if (c < '0' || c > '7') throw CorruptArchive("bad octal field in tar header");
    v = v * 8 + static_cast<std::uint64_t>(c - '0');
    any = true;
  }
  return v;
}

std::string_view cstr_field(const char* p, std::size_t n) {
  return {p, strnlen(p, n)};
}

bool header_checksum_ok(const char* h) {
  const auto stored = parse_octal({h + 148, 8});
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < kBlock; ++i) {
    sum += (i >= 148 && i < 156) ? static_cast<unsigned char>(' ') : static_cast<unsigned char>(h[i]);
  }
  return sum == stored;
}

}  // namespace

bool is_gzip(std::span<const char> bytes) {
  return bytes.size() >= 2 && static_cast<unsigned char>(bytes[0]) == 0x1F &&
         static_cast<unsigned char>(bytes[1]) == 0x8B;
}

bool is_tar(std::span<const char> bytes) {
  if (bytes.size() < kBlock) return false;
  const std::string_view magic(bytes.data() + 257, 5);
  if (magic == "ustar") return true;
  // pre-POSIX tar has no magic; accept a header whose checksum verifies
  try {
    return bytes[0] != '\0' && header_checksum_ok(bytes.data());
  } catch (const CorruptArchive&) {
    return false;
  }
}

std::string gunzip(std::span<const char> bytes) {
  z_stream zs{};
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) throw CorruptArchive("inflateInit2 failed");
  std::string out;
  char buf[1 << 15];
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(bytes.data()));
  zs.avail_in = static_cast<uInt>(bytes.size());
  int rc = Z_OK;
  while (true) {
    zs.next_out = reinterpret_cast<Bytef*>(buf);
    zs.avail_out = sizeof buf;
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw CorruptArchive("gzip stream is not decodable");
    }
    out.append(buf, sizeof buf - zs.avail_out);
    if (rc == Z_STREAM_END) {
      if (zs.avail_in == 0) break;
      inflateReset(&zs);  // next concatenated member
      continue;
    }
    if (zs.avail_in == 0 && zs.avail_out != 0) break;
  }
  inflateEnd(&zs);
  if (rc != Z_STREAM_END) throw CorruptArchive("truncated gzip stream");
  return out;
}

std::vector<ArchiveMember> read_tar(std::span<const char> bytes) {
  std::vector<ArchiveMember> members;
  std::string long_name;
  std::size_t pos = 0;
  while (pos + kBlock <= bytes.size()) {
    const char* h = bytes.data() + pos;
    if (std::all_of(h, h + kBlock, [](char c) { return c == '\0'; })) break;
    if (!header_checksum_ok(h)) throw CorruptArchive("tar header checksum mismatch");

    const std::uint64_t size = parse_octal({h + 124, 12});
    const char type = h[156];
    std::string name(cstr_field(h, 100));
    const std::string_view prefix = cstr_field(h + 345, 155);
    if (std::string_view(h + 257, 5) == "ustar" && !prefix.empty()) {
      name = std::string(prefix) + "/" + name;
    }
    pos += kBlock;
    if (pos + size > bytes.size()) throw CorruptArchive("tar member runs past end of archive");
    std::string data(bytes.data() + pos, size);
    pos += (size + kBlock - 1) / kBlock * kBlock;

    if (type == 'L') {  // GNU long name for the next entry
      long_name = std::string(cstr_field(data.data(), data.size()));
      continue;
    }
    if (!long_name.empty()) {
      name = std::move(long_name);
      long_name.clear();
    }
    if (type == '0' || type == '\0' || type == '7') {
      if (name.starts_with("./")) name.erase(0, 2);
      members.push_back({std::move(name), std::move(data)});
    }
  }
  return members;
}

}  // namespace liftbench
