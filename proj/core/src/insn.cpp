#include "cfweave/classfile/insn.hpp"

#include <cstring>
#include <sstream>

namespace cfweave::classfile {

namespace {

std::string label_name(Label l) { return "L" + std::to_string(l.id); }

std::string constant_to_string(const Constant& c) {
  struct Visitor {
    std::string operator()(std::int32_t v) const { return std::to_string(v); }
    std::string operator()(const constant::FloatBits& f) const {
      float v;
      std::memcpy(&v, &f.bits, sizeof v);
      std::ostringstream os;
      os << v << "f";
      return os.str();
    }
    std::string operator()(std::int64_t v) const { return std::to_string(v) + "L"; }
    std::string operator()(const constant::DoubleBits& d) const {
      double v;
      std::memcpy(&v, &d.bits, sizeof v);
      std::ostringstream os;
      os << v << "d";
      return os.str();
    }
    std::string operator()(const constant::String& s) const { return "\"" + s.value + "\""; }
    std::string operator()(const constant::Class& c) const { return c.name + ".class"; }
    std::string operator()(const constant::MethodType& m) const { return "MethodType " + m.descriptor; }
    std::string operator()(const constant::Pooled& p) const { return "#" + std::to_string(p.index); }
  };
  return std::visit(Visitor{}, c);
}

}  // namespace

std::vector<Label> Insn::branch_targets() const {
  std::vector<Label> out;
  if (const auto* j = get_if<operand::Jump>()) {
    out.push_back(j->target);
  } else if (const auto* t = get_if<operand::TableSwitch>()) {
    out.push_back(t->default_target);
    out.insert(out.end(), t->targets.begin(), t->targets.end());
  } else if (const auto* l = get_if<operand::LookupSwitch>()) {
    out.push_back(l->default_target);
    for (const auto& [k, target] : l->pairs) out.push_back(target);
  }
  return out;
}

bool Insn::same_as(const Insn& other) const {
  if (opcode != other.opcode || kind() != other.kind()) return false;
  switch (kind()) {
    case InsnKind::LocalVar: return as<operand::LocalVar>().slot == other.as<operand::LocalVar>().slot;
    case InsnKind::Jump: return as<operand::Jump>().target == other.as<operand::Jump>().target;
    case InsnKind::Ldc: return as<operand::Ldc>().value == other.as<operand::Ldc>().value;
    case InsnKind::Iinc: {
      const auto& a = as<operand::Iinc>();
      const auto& b = other.as<operand::Iinc>();
      return a.slot == b.slot && a.delta == b.delta;
    }
    default: return operand == other.operand;
  }
}

std::string Insn::to_string() const {
  std::ostringstream os;
  switch (kind()) {
    case InsnKind::Label: return label_name(as<operand::Label>().label) + ":";
    case InsnKind::LineNumber: {
      const auto& ln = as<operand::LineNumber>();
      os << "LINE " << ln.line << " " << label_name(ln.start);
      return os.str();
    }
    default: break;
  }
  const Opcode shown = (kind() == InsnKind::Jump && as<operand::Jump>().wide)
                           ? (opcode == op::GOTO ? op::GOTO_W : op::JSR_W)
                           : opcode;
  os << mnemonic(shown);
  struct Visitor {
    std::ostringstream& os;
    void operator()(const operand::Label&) const {}
    void operator()(const operand::LineNumber&) const {}
    void operator()(const operand::Simple&) const {}
    void operator()(const operand::Int& v) const { os << ' ' << v.value; }
    void operator()(const operand::LocalVar& v) const { os << ' ' << v.slot; }
    void operator()(const operand::Type& v) const { os << ' ' << v.type; }
    void operator()(const operand::Field& v) const {
      os << ' ' << v.ref.owner << '.' << v.ref.name << ' ' << v.ref.descriptor;
    }
    void operator()(const operand::Method& v) const {
      os << ' ' << v.ref.owner << '.' << v.ref.name << v.ref.descriptor;
    }
    void operator()(const operand::InvokeDynamic& v) const { os << ' ' << v.name << v.descriptor; }
    void operator()(const operand::Jump& v) const { os << ' ' << label_name(v.target); }
    void operator()(const operand::TableSwitch& v) const {
      os << ' ' << v.low << ".." << v.high << " default:" << label_name(v.default_target);
      for (const auto& t : v.targets) os << ' ' << label_name(t);
    }
    void operator()(const operand::LookupSwitch& v) const {
      os << " default:" << label_name(v.default_target);
      for (const auto& [k, t] : v.pairs) os << ' ' << k << ':' << label_name(t);
    }
    void operator()(const operand::Ldc& v) const { os << ' ' << constant_to_string(v.value); }
    void operator()(const operand::Iinc& v) const { os << ' ' << v.slot << ' ' << v.delta; }
    void operator()(const operand::MultiANewArray& v) const {
      os << ' ' << v.type << ' ' << int{v.dimensions};
    }
  };
  std::visit(Visitor{os}, operand);
  return os.str();
}

void renumber(std::vector<Insn>& insns) {
  for (std::size_t i = 0; i < insns.size(); ++i) insns[i].index = static_cast<std::uint32_t>(i);
}

Insn push_int(std::int32_t v) {
  if (v >= -1 && v <= 5) return Insn::simple(static_cast<Opcode>(op::ICONST_0 + v));
  if (v >= -128 && v <= 127) return Insn::int_op(op::BIPUSH, v);
  if (v >= -32768 && v <= 32767) return Insn::int_op(op::SIPUSH, v);
  return Insn::ldc(v);
}

}  // namespace cfweave::classfile
