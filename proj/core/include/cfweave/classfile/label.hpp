#pragma once

#include <cstdint>
#include <functional>

namespace cfweave::classfile {

// Symbolic code position. Ids are unique within one CodeBody; id 0 is the
// null label.
struct Label {
  std::uint32_t id = 0;

  bool valid() const noexcept { return id != 0; }
  auto operator<=>(const Label&) const = default;
};

}  // namespace cfweave::classfile

template <>
struct std::hash<cfweave::classfile::Label> {
  std::size_t operator()(const cfweave::classfile::Label& l) const noexcept { return l.id; }
};
