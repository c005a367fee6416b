#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "cfweave/classfile/bytes.hpp"

namespace cfweave::classfile {

namespace tag {
inline constexpr std::uint8_t Utf8 = 1;
inline constexpr std::uint8_t Integer = 3;
inline constexpr std::uint8_t Float = 4;
inline constexpr std::uint8_t Long = 5;
inline constexpr std::uint8_t Double = 6;
inline constexpr std::uint8_t Class = 7;
inline constexpr std::uint8_t String = 8;
inline constexpr std::uint8_t Fieldref = 9;
inline constexpr std::uint8_t Methodref = 10;
inline constexpr std::uint8_t InterfaceMethodref = 11;
inline constexpr std::uint8_t NameAndType = 12;
inline constexpr std::uint8_t MethodHandle = 15;
inline constexpr std::uint8_t MethodType = 16;
inline constexpr std::uint8_t Dynamic = 17;
inline constexpr std::uint8_t InvokeDynamic = 18;
inline constexpr std::uint8_t Module = 19;
inline constexpr std::uint8_t Package = 20;
}  // namespace tag

namespace cp {
// Slot 0 and the upper half of a Long/Double.
struct Unusable {
  bool operator==(const Unusable&) const = default;
};
// Modified UTF-8 bytes, kept verbatim.
struct Utf8 {
  std::string value;
  bool operator==(const Utf8&) const = default;
};
struct Integer {
  std::int32_t value;
  bool operator==(const Integer&) const = default;
};
// Floats and doubles are stored as raw bits so NaN payloads survive.
struct Float {
  std::uint32_t bits;
  bool operator==(const Float&) const = default;
};
struct Long {
  std::int64_t value;
  bool operator==(const Long&) const = default;
};
struct Double {
  std::uint64_t bits;
  bool operator==(const Double&) const = default;
};
struct Class {
  std::uint16_t name;
  bool operator==(const Class&) const = default;
};
struct String {
  std::uint16_t utf8;
  bool operator==(const String&) const = default;
};
// Fieldref, Methodref and InterfaceMethodref share a layout.
struct MemberRef {
  std::uint8_t tag;
  std::uint16_t owner;
  std::uint16_t name_and_type;
  bool operator==(const MemberRef&) const = default;
};
struct NameAndType {
  std::uint16_t name;
  std::uint16_t descriptor;
  bool operator==(const NameAndType&) const = default;
};
struct MethodHandle {
  std::uint8_t kind;
  std::uint16_t reference;
  bool operator==(const MethodHandle&) const = default;
};
struct MethodType {
  std::uint16_t descriptor;
  bool operator==(const MethodType&) const = default;
};
// Dynamic and InvokeDynamic.
struct DynamicRef {
  std::uint8_t tag;
  std::uint16_t bootstrap;
  std::uint16_t name_and_type;
  bool operator==(const DynamicRef&) const = default;
};
struct ModuleRef {
  std::uint16_t name;
  bool operator==(const ModuleRef&) const = default;
};
struct PackageRef {
  std::uint16_t name;
  bool operator==(const PackageRef&) const = default;
};

using Entry = std::variant<Unusable, Utf8, Integer, Float, Long, Double, Class, String, MemberRef,
                           NameAndType, MethodHandle, MethodType, DynamicRef, ModuleRef, PackageRef>;

std::uint8_t tag_of(const Entry& e) noexcept;
}  // namespace cp

// A resolved Fieldref/Methodref/InterfaceMethodref.
struct MemberRef {
  std::string owner;
  std::string name;
  std::string descriptor;
  bool operator==(const MemberRef&) const = default;
};

// Pool index a model element was read from. Encoders reuse it while the
// entry still holds the same value, so classes whose pool has duplicate
// entries re-emit with the same references. Ignored by equality.
struct PoolHint {
  std::uint16_t index = 0;
  bool operator==(const PoolHint&) const noexcept { return true; }
};

// Indexed constant pool. Parsing keeps every entry as written (duplicates
// included); interning is append-only and returns the lowest existing index
// holding an equal entry.
class ConstantPool {
 public:
  ConstantPool();

  static ConstantPool read(ByteReader& in);
  void write(ByteWriter& out) const;

  // Number of slots including slot 0, i.e. the class-file constant_pool_count.
  std::size_t count() const noexcept { return entries_.size(); }
  const cp::Entry& at(std::uint16_t index) const;
  std::uint8_t tag_at(std::uint16_t index) const { return cp::tag_of(at(index)); }

  template <class T>
  const T& get(std::uint16_t index) const {
    const auto* p = std::get_if<T>(&at(index));
    if (p == nullptr) throw MalformedClass("constant pool entry " + std::to_string(index) + " has unexpected tag");
    return *p;
  }

  const std::string& utf8(std::uint16_t index) const { return get<cp::Utf8>(index).value; }
  const std::string& class_name(std::uint16_t index) const { return utf8(get<cp::Class>(index).name); }
  std::pair<const std::string&, const std::string&> name_and_type(std::uint16_t index) const;
  MemberRef member(std::uint16_t index) const;

  std::uint16_t intern(const cp::Entry& entry);
  std::uint16_t intern_utf8(std::string_view s);
  std::uint16_t intern_class(std::string_view internal_name);
  std::uint16_t intern_string(std::string_view s);
  std::uint16_t intern_int(std::int32_t v);
  std::uint16_t intern_float_bits(std::uint32_t bits);
  std::uint16_t intern_long(std::int64_t v);
  std::uint16_t intern_double_bits(std::uint64_t bits);
  std::uint16_t intern_name_and_type(std::string_view name, std::string_view descriptor);
  std::uint16_t intern_member(std::uint8_t member_tag, const MemberRef& ref);
  std::uint16_t intern_method_type(std::string_view descriptor);

  // As above, but return hint.index if that entry already holds the value.
  std::uint16_t intern_utf8(std::string_view s, PoolHint hint);
  std::uint16_t intern_class(std::string_view internal_name, PoolHint hint);
  std::uint16_t intern_member(std::uint8_t member_tag, const MemberRef& ref, PoolHint hint);

  // Checks that every cross-reference in the pool points at an entry of
  // the right kind. Throws MalformedClass otherwise.
  void validate() const;

 private:
  std::uint16_t append(const cp::Entry& entry);
  void build_index() const;
  static std::string key_of(const cp::Entry& e);

  std::vector<cp::Entry> entries_;
  mutable std::unordered_map<std::string, std::uint16_t> index_;
  mutable bool indexed_ = false;
};

}  // namespace cfweave::classfile
