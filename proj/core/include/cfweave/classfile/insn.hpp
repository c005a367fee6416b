#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "cfweave/classfile/constant_pool.hpp"
#include "cfweave/classfile/label.hpp"
#include "cfweave/classfile/opcodes.hpp"

namespace cfweave::classfile {

enum class InsnKind : std::uint8_t {
  Label,
  LineNumber,
  Simple,
  IntOperand,
  LocalVar,
  Type,
  Field,
  Method,
  InvokeDynamic,
  Jump,
  TableSwitch,
  LookupSwitch,
  Ldc,
  Iinc,
  MultiANewArray,
};

// Constants loadable by ldc/ldc_w/ldc2_w.
namespace constant {
struct FloatBits {
  std::uint32_t bits;
  bool operator==(const FloatBits&) const = default;
};
struct DoubleBits {
  std::uint64_t bits;
  bool operator==(const DoubleBits&) const = default;
};
struct String {
  std::string value;
  bool operator==(const String&) const = default;
};
// A class literal: internal name or array descriptor.
struct Class {
  std::string name;
  bool operator==(const Class&) const = default;
};
struct MethodType {
  std::string descriptor;
  bool operator==(const MethodType&) const = default;
};
// MethodHandle or dynamic constant, kept by pool index. `descriptor` is the
// loaded value's field type.
struct Pooled {
  std::uint16_t index;
  std::string descriptor;
  bool operator==(const Pooled&) const = default;
};
}  // namespace constant

using Constant = std::variant<std::int32_t, constant::FloatBits, std::int64_t, constant::DoubleBits,
                              constant::String, constant::Class, constant::MethodType, constant::Pooled>;

inline bool is_category2(const Constant& c) {
  return std::holds_alternative<std::int64_t>(c) || std::holds_alternative<constant::DoubleBits>(c);
}

namespace operand {
struct Label {
  classfile::Label label;
  bool operator==(const Label&) const = default;
};
// Pseudo-instruction: source line `line` starts at `start`.
struct LineNumber {
  std::uint16_t line;
  classfile::Label start;
  bool operator==(const LineNumber&) const = default;
};
struct Simple {
  bool operator==(const Simple&) const = default;
};
// bipush, sipush, newarray (array type code).
struct Int {
  std::int32_t value;
  bool operator==(const Int&) const = default;
};
// Encoding the instruction was read with; Auto picks the shortest.
enum class VarForm : std::uint8_t { Auto, Implied, Normal, Wide };
struct LocalVar {
  std::uint16_t slot;
  VarForm form = VarForm::Auto;
  bool operator==(const LocalVar&) const = default;
};
// new, anewarray, checkcast, instanceof.
struct Type {
  std::string type;
  bool operator==(const Type&) const = default;
};
struct Field {
  MemberRef ref;
  bool operator==(const Field&) const = default;
};
struct Method {
  MemberRef ref;
  bool is_interface = false;
  bool operator==(const Method&) const = default;
};
struct InvokeDynamic {
  std::uint16_t pool_index;
  std::string name;
  std::string descriptor;
  bool operator==(const InvokeDynamic&) const = default;
};
// goto/jsr keep their opcode; `wide` records a goto_w/jsr_w encoding.
struct Jump {
  classfile::Label target;
  bool wide = false;
  bool operator==(const Jump&) const = default;
};
struct TableSwitch {
  std::int32_t low;
  std::int32_t high;
  classfile::Label default_target;
  std::vector<classfile::Label> targets;
  bool operator==(const TableSwitch&) const = default;
};
struct LookupSwitch {
  classfile::Label default_target;
  std::vector<std::pair<std::int32_t, classfile::Label>> pairs;
  bool operator==(const LookupSwitch&) const = default;
};
// `wide` records an ldc_w encoding of a single-slot constant.
struct Ldc {
  Constant value;
  bool wide = false;
  bool operator==(const Ldc&) const = default;
};
struct Iinc {
  std::uint16_t slot;
  std::int16_t delta;
  bool wide = false;
  bool operator==(const Iinc&) const = default;
};
struct MultiANewArray {
  std::string type;
  std::uint8_t dimensions;
  bool operator==(const MultiANewArray&) const = default;
};
}  // namespace operand

// One element of a decoded method body. Labels and line numbers are pseudo
// instructions (is_real() == false); branch operands always name labels.
// Load/store short forms are normalized: iload_1 becomes ILOAD slot 1.
struct Insn {
  using Operand = std::variant<operand::Label, operand::LineNumber, operand::Simple, operand::Int,
                               operand::LocalVar, operand::Type, operand::Field, operand::Method,
                               operand::InvokeDynamic, operand::Jump, operand::TableSwitch,
                               operand::LookupSwitch, operand::Ldc, operand::Iinc, operand::MultiANewArray>;

  std::uint32_t index = 0;
  Opcode opcode = op::NOP;
  Operand operand = operand::Simple{};
  // Pool index of the operand as read (Type, Field, Method, Ldc,
  // MultiANewArray). Kept by copies; fresh instructions leave it 0.
  PoolHint pool_hint;

  InsnKind kind() const noexcept { return static_cast<InsnKind>(operand.index()); }
  bool is_real() const noexcept { return kind() != InsnKind::Label && kind() != InsnKind::LineNumber; }
  bool is_label() const noexcept { return kind() == InsnKind::Label; }

  template <class T>
  const T& as() const {
    return std::get<T>(operand);
  }
  template <class T>
  T& as() {
    return std::get<T>(operand);
  }
  template <class T>
  const T* get_if() const noexcept {
    return std::get_if<T>(&operand);
  }

  // Every label this instruction can transfer control to.
  std::vector<Label> branch_targets() const;

  // Semantic equality: ignores the index and encoding-form hints.
  bool same_as(const Insn& other) const;

  std::string to_string() const;

  static Insn label(Label l) { return make(op::NOP, operand::Label{l}); }
  static Insn line(std::uint16_t line, Label start) { return make(op::NOP, operand::LineNumber{line, start}); }
  static Insn simple(Opcode o) { return make(o, operand::Simple{}); }
  static Insn int_op(Opcode o, std::int32_t v) { return make(o, operand::Int{v}); }
  static Insn var(Opcode o, std::uint16_t slot) { return make(o, operand::LocalVar{slot}); }
  static Insn type(Opcode o, std::string t) { return make(o, operand::Type{std::move(t)}); }
  static Insn field(Opcode o, std::string owner, std::string name, std::string desc) {
    return make(o, operand::Field{MemberRef{std::move(owner), std::move(name), std::move(desc)}});
  }
  static Insn method(Opcode o, std::string owner, std::string name, std::string desc, bool itf = false) {
    return make(o, operand::Method{MemberRef{std::move(owner), std::move(name), std::move(desc)}, itf});
  }
  static Insn jump(Opcode o, Label target) { return make(o, operand::Jump{target}); }
  static Insn ldc(Constant c) { return make(op::LDC, operand::Ldc{std::move(c)}); }
  static Insn iinc(std::uint16_t slot, std::int16_t delta) { return make(op::IINC, operand::Iinc{slot, delta}); }
  static Insn table_switch(std::int32_t low, std::int32_t high, Label dflt, std::vector<Label> targets) {
    return make(op::TABLESWITCH, operand::TableSwitch{low, high, dflt, std::move(targets)});
  }
  static Insn lookup_switch(Label dflt, std::vector<std::pair<std::int32_t, Label>> pairs) {
    return make(op::LOOKUPSWITCH, operand::LookupSwitch{dflt, std::move(pairs)});
  }
  static Insn multi_anew_array(std::string type, std::uint8_t dims) {
    return make(op::MULTIANEWARRAY, operand::MultiANewArray{std::move(type), dims});
  }

 private:
  static Insn make(Opcode o, Operand operand) {
    Insn i;
    i.opcode = o;
    i.operand = std::move(operand);
    return i;
  }
};

// Renumbers `index` to the position in the list.
void renumber(std::vector<Insn>& insns);

// Shortest instruction pushing an int constant (iconst_n, bipush, sipush, ldc).
Insn push_int(std::int32_t v);

}  // namespace cfweave::classfile
