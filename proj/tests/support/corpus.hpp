#pragma once

#include <filesystem>
#include <vector>

#include "cfweave/classfile/jar.hpp"

namespace testsupport {

inline std::filesystem::path corpus_dir() { return CFWEAVE_CORPUS_DIR; }

// Every class entry of the two corpus jars, in archive order.
inline std::vector<cfweave::classfile::JarEntry> corpus_classes() {
  std::vector<cfweave::classfile::JarEntry> out;
  for (const char* jar : {"py4j0.10.9.9.jar", "slf4j-api-2.0.17.jar"}) {
    auto a = cfweave::classfile::read_jar(corpus_dir() / jar);
    for (auto& e : a.entries)
      if (e.is_class() && !e.name.ends_with("module-info.class")) out.push_back(e);
  }
  return out;
}

}  // namespace testsupport
