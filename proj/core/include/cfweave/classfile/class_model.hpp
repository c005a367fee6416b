#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cfweave/classfile/bytes.hpp"
#include "cfweave/classfile/constant_pool.hpp"
#include "cfweave/classfile/insn.hpp"
#include "cfweave/classfile/vtype.hpp"

namespace cfweave::classfile {

namespace acc {
inline constexpr std::uint16_t PUBLIC = 0x0001;
inline constexpr std::uint16_t PRIVATE = 0x0002;
inline constexpr std::uint16_t PROTECTED = 0x0004;
inline constexpr std::uint16_t STATIC = 0x0008;
inline constexpr std::uint16_t FINAL = 0x0010;
inline constexpr std::uint16_t SUPER = 0x0020;
inline constexpr std::uint16_t SYNCHRONIZED = 0x0020;
inline constexpr std::uint16_t VOLATILE = 0x0040;
inline constexpr std::uint16_t BRIDGE = 0x0040;
inline constexpr std::uint16_t VARARGS = 0x0080;
inline constexpr std::uint16_t NATIVE = 0x0100;
inline constexpr std::uint16_t INTERFACE = 0x0200;
inline constexpr std::uint16_t ABSTRACT = 0x0400;
inline constexpr std::uint16_t STRICT = 0x0800;
inline constexpr std::uint16_t SYNTHETIC = 0x1000;
inline constexpr std::uint16_t ANNOTATION = 0x2000;
inline constexpr std::uint16_t ENUM = 0x4000;
}  // namespace acc

struct AccessFlags {
  std::uint16_t bits = 0;

  bool has(std::uint16_t flag) const noexcept { return (bits & flag) != 0; }
  bool operator==(const AccessFlags&) const = default;
};

// An attribute kept as opaque bytes (payload only, without the name index
// and length header).
struct RawAttribute {
  std::string name;
  Bytes data;
  PoolHint name_index;
  bool operator==(const RawAttribute&) const = default;
};

struct ExceptionHandler {
  Label start;
  Label end;
  Label handler;
  std::optional<std::string> catch_type;  // absent = catch-all (finally)
  PoolHint catch_hint;
  bool operator==(const ExceptionHandler&) const = default;
};

// Entry of LocalVariableTable or LocalVariableTypeTable (where `descriptor`
// holds the generic signature).
struct LocalVariable {
  Label start;
  Label end;
  std::string name;
  std::string descriptor;
  std::uint16_t slot;
  PoolHint name_hint, descriptor_hint;
  bool operator==(const LocalVariable&) const = default;
};

// One StackMapTable entry with its offset replaced by a label. `type`
// records the compressed form; `locals` holds the appended locals for
// Append and the full list for Full, and is empty otherwise.
struct StackMapFrame {
  enum class Type : std::uint8_t { Same, SameLocals1StackItem, Chop, Append, Full };

  Label label;
  Type type = Type::Full;
  std::uint8_t chopped = 0;
  std::vector<VType> locals;  // verification-type list: long/double are one entry
  std::vector<VType> stack;
  std::vector<PoolHint> class_hints;  // one per Ref entry, locals first
  bool operator==(const StackMapFrame&) const = default;
};

struct CodeBody {
  // Where each Code sub-attribute sits, so re-emission keeps javac's order.
  enum class Part : std::uint8_t { LineNumbers, LocalVariables, LocalVariableTypes, StackMap, Raw };
  struct AttributeSlot {
    Part part;
    std::size_t raw_index = 0;  // into raw_attributes when part == Raw
    PoolHint name_index;
    bool operator==(const AttributeSlot&) const = default;
  };

  std::uint16_t max_stack = 0;
  std::uint16_t max_locals = 0;
  std::vector<Insn> insns;
  std::vector<ExceptionHandler> exception_table;
  std::vector<LocalVariable> local_variables;
  std::vector<LocalVariable> local_variable_types;
  std::optional<std::vector<StackMapFrame>> stack_map;
  std::vector<RawAttribute> raw_attributes;
  std::vector<AttributeSlot> attribute_order;
  std::uint32_t next_label_id = 1;

  Label new_label() { return Label{next_label_id++}; }

  // (label, line) pairs in instruction order, read off the LineNumber
  // pseudo-instructions.
  std::vector<std::pair<Label, std::uint16_t>> line_table() const;

  // Index into insns of the Label pseudo-instruction for `l`, or npos.
  std::size_t find_label(Label l) const;

  bool operator==(const CodeBody&) const = default;
};

struct FieldModel {
  AccessFlags access;
  std::string name;
  std::string descriptor;
  std::vector<RawAttribute> attributes;
  PoolHint name_hint, descriptor_hint;
  bool operator==(const FieldModel&) const = default;
};

struct MethodModel {
  AccessFlags access;
  std::string name;
  std::string descriptor;
  std::optional<CodeBody> code;
  std::vector<std::string> exceptions_thrown;
  // Every method attribute in file order. "Code" and "Exceptions" appear
  // as empty placeholders; their content lives in `code` and
  // `exceptions_thrown`.
  std::vector<RawAttribute> attributes;
  PoolHint name_hint, descriptor_hint;
  std::vector<PoolHint> exception_hints;

  bool is_static() const noexcept { return access.has(acc::STATIC); }
  bool is_constructor() const noexcept { return name == "<init>"; }
  bool operator==(const MethodModel&) const = default;
};

struct ClassModel {
  std::uint16_t minor_version = 0;
  std::uint16_t major_version = 52;
  ConstantPool constant_pool;
  AccessFlags access;
  std::string this_class;
  std::optional<std::string> super_class;
  std::vector<std::string> interfaces;
  std::vector<FieldModel> fields;
  std::vector<MethodModel> methods;
  std::vector<RawAttribute> attributes;
  PoolHint this_hint, super_hint;
  std::vector<PoolHint> interface_hints;

  bool is_interface() const noexcept { return access.has(acc::INTERFACE); }
  const FieldModel* find_field(std::string_view name) const;
};

inline constexpr std::uint16_t kMinSupportedMajor = 49;
inline constexpr std::uint16_t kMaxSupportedMajor = 61;

// Throws MalformedClass or UnsupportedVersion.
ClassModel parse_class(std::span<const std::uint8_t> bytes);

// Throws EncodingOverflow, PoolOverflow.
Bytes emit_class(ClassModel& model);

// Decodes one Code attribute payload against `pool`.
CodeBody decode_code(std::span<const std::uint8_t> payload, const ConstantPool& pool);

// Encodes `code` into a Code attribute payload, interning into `pool`.
Bytes encode_code(const CodeBody& code, ConstantPool& pool);

}  // namespace cfweave::classfile
