#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>

#include "cfweave/classfile/class_model.hpp"

namespace cfweave::analysis {

struct ClassInfo {
  std::optional<std::string> super;  // absent only for java/lang/Object
  bool is_interface = false;
};

// Superclass table used to merge reference types. Starts with a built-in
// table of common java.lang / java.util / java.io types; callers add the
// classes being woven and any classpath entries. Read-only once built, so
// it can be shared between worker threads.
class ClassHierarchy {
 public:
  ClassHierarchy();

  void add(std::string name, ClassInfo info);
  void add_class(const classfile::ClassModel& model);
  // Reads just the header of a class file. Throws MalformedClass.
  void add_class_bytes(std::span<const std::uint8_t> bytes);
  // A directory (searched recursively), a jar, or a single .class file.
  // Throws IoError / ArchiveError.
  void add_classpath_entry(const std::filesystem::path& entry);

  const ClassInfo* find(std::string_view name) const;
  std::size_t size() const noexcept { return classes_.size(); }

  // Nearest common superclass of two class or array names, or nothing when
  // some class on the way is unknown. Interfaces merge to java/lang/Object,
  // as the verifier treats them.
  std::optional<std::string> common_superclass(std::string_view a, std::string_view b) const;

  // Total version: unknown classes fall back to java/lang/Object.
  std::string resolve_common_superclass(std::string_view a, std::string_view b) const;

 private:
  std::unordered_map<std::string, ClassInfo> classes_;
};

}  // namespace cfweave::analysis
