#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cfweave/analysis/frames.hpp"
#include "cfweave/classfile/class_model.hpp"

namespace cfweave::analysis {

using namespace classfile;

// Builds method bodies instruction by instruction, the way javac would lay
// them out. Used for generated helper classes and test programs. Labels are allocated up front and placed with mark().
class CodeBuilder {
 public:
  Label label() { return body_.new_label(); }
  CodeBuilder& mark(Label l) { return add(Insn::label(l)); }
  CodeBuilder& line(std::uint16_t n) {
    const Label l = label();
    mark(l);
    return add(Insn::line(n, l));
  }
  CodeBuilder& op(Opcode o) { return add(Insn::simple(o)); }
  CodeBuilder& iconst(std::int32_t v) { return add(push_int(v)); }
  CodeBuilder& ldc(Constant c) { return add(Insn::ldc(std::move(c))); }
  CodeBuilder& str(std::string s) { return ldc(constant::String{std::move(s)}); }
  CodeBuilder& var(Opcode o, std::uint16_t slot) { return add(Insn::var(o, slot)); }
  CodeBuilder& iinc(std::uint16_t slot, std::int16_t d) { return add(Insn::iinc(slot, d)); }
  CodeBuilder& jump(Opcode o, Label target) { return add(Insn::jump(o, target)); }
  CodeBuilder& type(Opcode o, std::string t) {
    if (o == op::NEW) mark(label());
    return add(Insn::type(o, std::move(t)));
  }
  CodeBuilder& field(Opcode o, std::string owner, std::string name, std::string desc) {
    return add(Insn::field(o, std::move(owner), std::move(name), std::move(desc)));
  }
  CodeBuilder& invoke(Opcode o, std::string owner, std::string name, std::string desc) {
    const bool itf = o == op::INVOKEINTERFACE;
    return add(Insn::method(o, std::move(owner), std::move(name), std::move(desc), itf));
  }
  CodeBuilder& int_op(Opcode o, std::int32_t v) { return add(Insn::int_op(o, v)); }
  CodeBuilder& table_switch(std::int32_t low, std::int32_t high, Label dflt, std::vector<Label> targets) {
    return add(Insn::table_switch(low, high, dflt, std::move(targets)));
  }
  CodeBuilder& lookup_switch(Label dflt, std::vector<std::pair<std::int32_t, Label>> pairs) {
    return add(Insn::lookup_switch(dflt, std::move(pairs)));
  }
  CodeBuilder& handler(Label start, Label end, Label h, std::optional<std::string> type) {
    body_.exception_table.push_back(ExceptionHandler{start, end, h, std::move(type)});
    return *this;
  }
  CodeBuilder& add(Insn i) {
    body_.insns.push_back(std::move(i));
    return *this;
  }

  CodeBody take() {
    renumber(body_.insns);
    return std::move(body_);
  }

 private:
  CodeBody body_;
};

// A public class with version 52 extending `super`.
ClassModel make_class(std::string name, std::string super = "java/lang/Object");

// Adds a method; max values and the stack map are computed from the body.
MethodModel& add_method(ClassModel& cls, std::uint16_t access, std::string name, std::string desc, CodeBody body);

// public <init>()V calling the superclass constructor.
MethodModel& add_default_constructor(ClassModel& cls);

// Recomputes max values and the stack map of every method with code.
void finish_frames(ClassModel& cls);

}  // namespace cfweave::analysis
