#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cfweave/classfile/bytes.hpp"

namespace cfweave::classfile {

struct JarEntry {
  std::string name;
  Bytes data;  // uncompressed content; empty for directory entries

  bool is_directory() const { return !name.empty() && name.back() == '/'; }
  bool is_class() const { return name.size() > 6 && name.ends_with(".class"); }

  // Set for entries read from an archive. While `data` still equals the
  // original content the entry is written back byte for byte.
  struct Origin;
  std::shared_ptr<const Origin> origin;
};

// A zip/jar archive in entry order. Only stored and deflated entries are
// supported; zip64 archives are rejected.
struct Archive {
  std::vector<JarEntry> entries;
  Bytes preamble;  // bytes before the first local header
  Bytes comment;

  static Archive parse(std::span<const std::uint8_t> bytes);
  Bytes serialize() const;
};

Archive read_jar(const std::filesystem::path& path);
void write_jar(const Archive& archive, const std::filesystem::path& path);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> data);

}  // namespace cfweave::classfile
