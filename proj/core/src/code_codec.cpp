// Code attribute decoding and encoding.
//
// Decoding turns byte offsets into labels: every offset referenced by a
// branch, switch, exception range, debug table, stack map frame or NEW
// site gets one Label pseudo-instruction. Encoding lays the list out again,
// widening goto/jsr to goto_w/jsr_w when a 16-bit offset does not fit.

#include <algorithm>
#include <limits>
#include <map>
#include <set>

#include "cfweave/classfile/class_model.hpp"
#include "cfweave/classfile/descriptor.hpp"

namespace cfweave::classfile {

namespace {

constexpr std::uint8_t kVtTop = 0, kVtInt = 1, kVtFloat = 2, kVtDouble = 3, kVtLong = 4, kVtNull = 5,
                       kVtUninitThis = 6, kVtObject = 7, kVtUninit = 8;

// One instruction as read from the code array, before labels exist.
struct RawInsn {
  std::uint32_t offset;
  Insn insn;                           // branch targets are filled in later
  std::vector<std::int64_t> targets;   // absolute target offsets, same order as Insn::branch_targets
};

bool is_load_store(Opcode o) { return (o >= op::ILOAD && o <= op::ALOAD) || (o >= op::ISTORE && o <= op::ASTORE); }

Constant pooled_constant(const ConstantPool& pool, std::uint16_t index) {
  const auto& e = pool.at(index);
  switch (cp::tag_of(e)) {
    case tag::Integer: return std::get<cp::Integer>(e).value;
    case tag::Float: return constant::FloatBits{std::get<cp::Float>(e).bits};
    case tag::Long: return std::get<cp::Long>(e).value;
    case tag::Double: return constant::DoubleBits{std::get<cp::Double>(e).bits};
    case tag::String: return constant::String{pool.utf8(std::get<cp::String>(e).utf8)};
    case tag::Class: return constant::Class{pool.class_name(index)};
    case tag::MethodType: return constant::MethodType{pool.utf8(std::get<cp::MethodType>(e).descriptor)};
    case tag::MethodHandle: return constant::Pooled{index, "Ljava/lang/invoke/MethodHandle;"};
    case tag::Dynamic: {
      const auto& d = std::get<cp::DynamicRef>(e);
      return constant::Pooled{index, pool.name_and_type(d.name_and_type).second};
    }
    default: throw MalformedClass("ldc of non-loadable constant #" + std::to_string(index));
  }
}

std::vector<RawInsn> read_instructions(std::span<const std::uint8_t> code, const ConstantPool& pool) {
  std::vector<RawInsn> out;
  ByteReader in(code);
  while (!in.at_end()) {
    const auto offset = static_cast<std::uint32_t>(in.position());
    const Opcode o = in.u1();
    const auto& info = opcode_info(o);
    RawInsn raw{offset, Insn{}, {}};
    Insn& insn = raw.insn;
    auto branch = [&](std::int64_t rel) { raw.targets.push_back(offset + rel); };
    switch (info.format) {
      case OperandFormat::None: insn = Insn::simple(o); break;
      case OperandFormat::Local: {
        insn = Insn::var(o, in.u1());
        insn.as<operand::LocalVar>().form = operand::VarForm::Normal;
        break;
      }
      case OperandFormat::LocalImplied: {
        const bool store = o >= op::ISTORE_0;
        const int rel = o - (store ? op::ISTORE_0 : op::ILOAD_0);
        const auto base = static_cast<Opcode>((store ? op::ISTORE : op::ILOAD) + rel / 4);
        insn = Insn::var(base, static_cast<std::uint16_t>(rel % 4));
        insn.as<operand::LocalVar>().form = operand::VarForm::Implied;
        break;
      }
      case OperandFormat::Byte:
        insn = Insn::int_op(o, o == op::NEWARRAY ? in.u1() : in.s1());
        break;
      case OperandFormat::Short: insn = Insn::int_op(o, in.s2()); break;
      case OperandFormat::PoolU1: {
        const std::uint16_t idx = in.u1();
        insn = Insn::ldc(pooled_constant(pool, idx));
        insn.pool_hint.index = idx;
        break;
      }
      case OperandFormat::PoolU2: {
        const std::uint16_t idx = in.u2();
        if (o == op::LDC_W || o == op::LDC2_W) {
          insn = Insn::ldc(pooled_constant(pool, idx));
          insn.as<operand::Ldc>().wide = (o == op::LDC_W);
          if ((o == op::LDC2_W) != is_category2(insn.as<operand::Ldc>().value))
            throw MalformedClass("ldc form does not match constant category at offset " + std::to_string(offset));
        } else if (o >= op::GETSTATIC && o <= op::PUTFIELD) {
          if (pool.tag_at(idx) != tag::Fieldref) throw MalformedClass("field instruction without Fieldref");
          auto ref = pool.member(idx);
          insn = Insn::field(o, ref.owner, ref.name, ref.descriptor);
        } else if (o >= op::INVOKEVIRTUAL && o <= op::INVOKESTATIC) {
          const auto t = pool.tag_at(idx);
          if (t != tag::Methodref && t != tag::InterfaceMethodref)
            throw MalformedClass("invoke instruction without Methodref");
          auto ref = pool.member(idx);
          insn = Insn::method(o, ref.owner, ref.name, ref.descriptor, t == tag::InterfaceMethodref);
        } else {
          insn = Insn::type(o, pool.class_name(idx));
        }
        insn.pool_hint.index = idx;
        break;
      }
      case OperandFormat::Branch2:
        insn = Insn::jump(o, Label{});
        branch(in.s2());
        break;
      case OperandFormat::Branch4:
        insn = Insn::jump(o == op::GOTO_W ? op::GOTO : op::JSR, Label{});
        insn.as<operand::Jump>().wide = true;
        branch(in.s4());
        break;
      case OperandFormat::Iinc: {
        const std::uint16_t slot = in.u1();
        insn = Insn::iinc(slot, in.s1());
        break;
      }
      case OperandFormat::TableSwitch: {
        in.skip((4 - (offset + 1) % 4) % 4);
        branch(in.s4());
        const std::int32_t low = in.s4();
        const std::int32_t high = in.s4();
        if (high < low) throw MalformedClass("tableswitch high < low");
        const std::int64_t n = std::int64_t{high} - low + 1;
        if (n > static_cast<std::int64_t>(in.remaining() / 4)) throw MalformedClass("truncated tableswitch");
        for (std::int64_t k = 0; k < n; ++k) branch(in.s4());
        insn = Insn::table_switch(low, high, Label{}, std::vector<Label>(static_cast<std::size_t>(n)));
        break;
      }
      case OperandFormat::LookupSwitch: {
        in.skip((4 - (offset + 1) % 4) % 4);
        branch(in.s4());
        const std::int32_t n = in.s4();
        if (n < 0 || n > static_cast<std::int64_t>(in.remaining() / 8)) throw MalformedClass("bad lookupswitch");
        std::vector<std::pair<std::int32_t, Label>> pairs;
        for (std::int32_t k = 0; k < n; ++k) {
          const std::int32_t key = in.s4();
          branch(in.s4());
          pairs.emplace_back(key, Label{});
        }
        insn = Insn::lookup_switch(Label{}, std::move(pairs));
        break;
      }
      case OperandFormat::InvokeInterface: {
        const std::uint16_t idx = in.u2();
        in.skip(2);  // count, 0
        if (pool.tag_at(idx) != tag::InterfaceMethodref)
          throw MalformedClass("invokeinterface without InterfaceMethodref");
        auto ref = pool.member(idx);
        insn = Insn::method(o, ref.owner, ref.name, ref.descriptor, true);
        insn.pool_hint.index = idx;
        break;
      }
      case OperandFormat::InvokeDynamic: {
        const std::uint16_t idx = in.u2();
        in.skip(2);
        const auto& d = pool.get<cp::DynamicRef>(idx);
        if (d.tag != tag::InvokeDynamic) throw MalformedClass("invokedynamic without InvokeDynamic constant");
        auto [name, desc] = pool.name_and_type(d.name_and_type);
        insn.opcode = o;
        insn.operand = operand::InvokeDynamic{idx, name, desc};
        break;
      }
      case OperandFormat::MultiANewArray: {
        const std::uint16_t idx = in.u2();
        insn = Insn::multi_anew_array(pool.class_name(idx), in.u1());
        insn.pool_hint.index = idx;
        break;
      }
      case OperandFormat::Wide: {
        const Opcode inner = in.u1();
        if (inner == op::IINC) {
          const std::uint16_t slot = in.u2();
          insn = Insn::iinc(slot, in.s2());
          insn.as<operand::Iinc>().wide = true;
        } else if (is_load_store(inner) || inner == op::RET) {
          insn = Insn::var(inner, in.u2());
          insn.as<operand::LocalVar>().form = operand::VarForm::Wide;
        } else {
          throw MalformedClass("bad wide instruction at offset " + std::to_string(offset));
        }
        break;
      }
      case OperandFormat::Invalid:
        throw MalformedClass("invalid opcode " + std::to_string(o) + " at offset " + std::to_string(offset));
    }
    out.push_back(std::move(raw));
  }
  return out;
}

struct RawLocalVar {
  std::uint16_t start, length, name, desc, slot;
};

std::vector<RawLocalVar> read_local_vars(std::span<const std::uint8_t> data) {
  ByteReader in(data);
  std::vector<RawLocalVar> out(in.u2());
  for (auto& v : out) v = RawLocalVar{in.u2(), in.u2(), in.u2(), in.u2(), in.u2()};
  return out;
}

struct RawFrame {
  std::uint32_t offset;
  StackMapFrame frame;
  std::vector<std::uint32_t> uninit_offsets;  // per Uninitialized entry, in locals-then-stack order
};

VType read_vtype(ByteReader& in, const ConstantPool& pool, std::vector<std::uint32_t>& uninit,
                 std::vector<PoolHint>& hints) {
  switch (const std::uint8_t t = in.u1()) {
    case kVtTop: return VType::top();
    case kVtInt: return VType::integer();
    case kVtFloat: return VType::float_();
    case kVtDouble: return VType::double_();
    case kVtLong: return VType::long_();
    case kVtNull: return VType::null();
    case kVtUninitThis: return VType::uninitialized_this();
    case kVtObject: {
      hints.push_back({in.u2()});
      return VType::ref(pool.class_name(hints.back().index));
    }
    case kVtUninit: {
      uninit.push_back(in.u2());
      return VType::uninitialized(Label{});
    }
    default: throw MalformedClass("bad verification type tag " + std::to_string(t));
  }
}

std::vector<RawFrame> read_stack_map(std::span<const std::uint8_t> data, const ConstantPool& pool) {
  ByteReader in(data);
  const std::uint16_t n = in.u2();
  std::vector<RawFrame> out;
  std::int64_t prev = -1;
  for (std::uint16_t i = 0; i < n; ++i) {
    RawFrame rf{};
    auto& f = rf.frame;
    const std::uint8_t t = in.u1();
    std::uint32_t delta = 0;
    if (t <= 63) {
      f.type = StackMapFrame::Type::Same;
      delta = t;
    } else if (t <= 127) {
      f.type = StackMapFrame::Type::SameLocals1StackItem;
      delta = t - 64u;
      f.stack.push_back(read_vtype(in, pool, rf.uninit_offsets, rf.frame.class_hints));
    } else if (t == 247) {
      f.type = StackMapFrame::Type::SameLocals1StackItem;
      delta = in.u2();
      f.stack.push_back(read_vtype(in, pool, rf.uninit_offsets, rf.frame.class_hints));
    } else if (t >= 248 && t <= 250) {
      f.type = StackMapFrame::Type::Chop;
      f.chopped = static_cast<std::uint8_t>(251 - t);
      delta = in.u2();
    } else if (t == 251) {
      f.type = StackMapFrame::Type::Same;
      delta = in.u2();
    } else if (t >= 252 && t <= 254) {
      f.type = StackMapFrame::Type::Append;
      delta = in.u2();
      for (int k = 0; k < t - 251; ++k) f.locals.push_back(read_vtype(in, pool, rf.uninit_offsets, rf.frame.class_hints));
    } else if (t == 255) {
      f.type = StackMapFrame::Type::Full;
      delta = in.u2();
      const std::uint16_t nl = in.u2();
      for (std::uint16_t k = 0; k < nl; ++k) f.locals.push_back(read_vtype(in, pool, rf.uninit_offsets, rf.frame.class_hints));
      const std::uint16_t ns = in.u2();
      for (std::uint16_t k = 0; k < ns; ++k) f.stack.push_back(read_vtype(in, pool, rf.uninit_offsets, rf.frame.class_hints));
    } else {
      throw MalformedClass("reserved stack map frame type " + std::to_string(t));
    }
    prev = prev + delta + 1;
    rf.offset = static_cast<std::uint32_t>(prev);
    out.push_back(std::move(rf));
  }
  if (!in.at_end()) throw MalformedClass("trailing bytes in StackMapTable");
  return out;
}

}  // namespace

CodeBody decode_code(std::span<const std::uint8_t> payload, const ConstantPool& pool) {
  ByteReader in(payload);
  CodeBody body;
  body.max_stack = in.u2();
  body.max_locals = in.u2();
  const std::uint32_t code_length = in.u4();
  if (code_length == 0 || code_length > 65535) throw MalformedClass("bad code_length " + std::to_string(code_length));
  const auto code = in.take(code_length);

  struct RawHandler {
    std::uint16_t start, end, handler, type;
  };
  std::vector<RawHandler> handlers(in.u2());
  for (auto& h : handlers) h = RawHandler{in.u2(), in.u2(), in.u2(), in.u2()};

  std::vector<std::pair<std::uint16_t, std::uint16_t>> lines;  // (pc, line) in table order
  std::vector<RawLocalVar> lvt, lvtt;
  std::vector<RawFrame> frames;
  bool have_lines = false, have_lvt = false, have_lvtt = false, have_frames = false;

  const std::uint16_t attr_count = in.u2();
  for (std::uint16_t a = 0; a < attr_count; ++a) {
    const PoolHint name_index{in.u2()};
    const std::string& name = pool.utf8(name_index.index);
    const auto data = in.take(in.u4());
    if (name == "LineNumberTable" && !have_lines) {
      ByteReader r(data);
      const std::uint16_t n = r.u2();
      for (std::uint16_t k = 0; k < n; ++k) {
        const std::uint16_t pc = r.u2();
        lines.emplace_back(pc, r.u2());
      }
      have_lines = true;
      body.attribute_order.push_back({CodeBody::Part::LineNumbers, 0, name_index});
    } else if (name == "LocalVariableTable" && !have_lvt) {
      lvt = read_local_vars(data);
      have_lvt = true;
      body.attribute_order.push_back({CodeBody::Part::LocalVariables, 0, name_index});
    } else if (name == "LocalVariableTypeTable" && !have_lvtt) {
      lvtt = read_local_vars(data);
      have_lvtt = true;
      body.attribute_order.push_back({CodeBody::Part::LocalVariableTypes, 0, name_index});
    } else if (name == "StackMapTable" && !have_frames) {
      frames = read_stack_map(data, pool);
      have_frames = true;
      body.attribute_order.push_back({CodeBody::Part::StackMap, 0, name_index});
    } else {
      body.attribute_order.push_back({CodeBody::Part::Raw, body.raw_attributes.size(), name_index});
      body.raw_attributes.push_back(RawAttribute{name, Bytes(data.begin(), data.end()), name_index});
    }
  }
  if (!in.at_end()) throw MalformedClass("trailing bytes in Code attribute");

  auto raws = read_instructions(code, pool);
  std::set<std::uint32_t> starts;
  for (const auto& r : raws) starts.insert(r.offset);

  // Offsets that need a label. code_length itself is valid as a range end.
  std::map<std::uint32_t, Label> labels;
  auto want = [&](std::int64_t off, bool allow_end) {
    if (off < 0 || off > code_length || (off == code_length && !allow_end) ||
        (off < code_length && !starts.count(static_cast<std::uint32_t>(off))))
      throw MalformedClass("code offset " + std::to_string(off) + " is not an instruction boundary");
    auto [it, inserted] = labels.try_emplace(static_cast<std::uint32_t>(off));
    if (inserted) it->second = body.new_label();
    return it->second;
  };
  // Assign label ids in offset order so they read naturally in dumps.
  std::set<std::int64_t> wanted;
  std::set<std::int64_t> wanted_end;
  for (const auto& r : raws) {
    for (auto t : r.targets) wanted.insert(t);
    if (r.insn.opcode == op::NEW) wanted.insert(r.offset);
  }
  for (const auto& h : handlers) {
    wanted.insert(h.start);
    wanted.insert(h.handler);
    wanted_end.insert(h.end);
  }
  for (const auto& [pc, line] : lines) wanted.insert(pc);
  for (const auto* table : {&lvt, &lvtt})
    for (const auto& v : *table) {
      wanted_end.insert(v.start);
      wanted_end.insert(std::int64_t{v.start} + v.length);
    }
  for (const auto& f : frames) {
    wanted.insert(f.offset);
    for (auto u : f.uninit_offsets) wanted.insert(u);
  }
  {
    std::set<std::int64_t> all = wanted;
    all.insert(wanted_end.begin(), wanted_end.end());
    for (auto off : all) want(off, wanted_end.count(off) && !wanted.count(off));
  }
  auto label_at = [&](std::int64_t off) { return labels.at(static_cast<std::uint32_t>(off)); };

  std::multimap<std::uint32_t, std::uint16_t> lines_at;
  for (const auto& [pc, line] : lines) lines_at.emplace(pc, line);

  for (auto& r : raws) {
    if (auto it = labels.find(r.offset); it != labels.end()) body.insns.push_back(Insn::label(it->second));
    auto [lo, hi] = lines_at.equal_range(r.offset);
    for (auto it = lo; it != hi; ++it) body.insns.push_back(Insn::line(it->second, label_at(r.offset)));
    Insn& insn = r.insn;
    std::size_t k = 0;
    if (auto* j = std::get_if<operand::Jump>(&insn.operand)) {
      j->target = label_at(r.targets[k++]);
    } else if (auto* t = std::get_if<operand::TableSwitch>(&insn.operand)) {
      t->default_target = label_at(r.targets[k++]);
      for (auto& l : t->targets) l = label_at(r.targets[k++]);
    } else if (auto* l = std::get_if<operand::LookupSwitch>(&insn.operand)) {
      l->default_target = label_at(r.targets[k++]);
      for (auto& [key, target] : l->pairs) target = label_at(r.targets[k++]);
    }
    body.insns.push_back(std::move(insn));
  }
  if (auto it = labels.find(code_length); it != labels.end()) body.insns.push_back(Insn::label(it->second));
  renumber(body.insns);

  for (const auto& h : handlers) {
    ExceptionHandler eh{label_at(h.start), label_at(h.end), label_at(h.handler), std::nullopt, {h.type}};
    if (h.type != 0) eh.catch_type = pool.class_name(h.type);
    body.exception_table.push_back(std::move(eh));
  }
  auto convert_vars = [&](const std::vector<RawLocalVar>& in_vars, std::vector<LocalVariable>& out_vars) {
    for (const auto& v : in_vars)
      out_vars.push_back(LocalVariable{label_at(v.start), label_at(std::int64_t{v.start} + v.length),
                                       pool.utf8(v.name), pool.utf8(v.desc), v.slot, {v.name}, {v.desc}});
  };
  convert_vars(lvt, body.local_variables);
  convert_vars(lvtt, body.local_variable_types);

  if (have_frames) {
    std::vector<StackMapFrame> out;
    for (auto& rf : frames) {
      rf.frame.label = label_at(rf.offset);
      std::size_t u = 0;
      for (auto* list : {&rf.frame.locals, &rf.frame.stack})
        for (auto& vt : *list)
          if (vt.kind() == VType::Kind::Uninitialized) vt = VType::uninitialized(label_at(rf.uninit_offsets[u++]));
      out.push_back(std::move(rf.frame));
    }
    body.stack_map = std::move(out);
  }
  return body;
}

// ---------------------------------------------------------------------------
// Encoding

namespace {

bool has_implied_form(Opcode o) { return is_load_store(o); }

std::size_t var_size(const operand::LocalVar& v, Opcode o) {
  using operand::VarForm;
  if (v.form == VarForm::Wide || v.slot > 255) return 4;
  if (v.form == VarForm::Normal) return 2;
  if (v.slot <= 3 && has_implied_form(o)) return 1;
  return 2;
}

std::uint16_t intern_constant(ConstantPool& pool, const Constant& c, PoolHint hint) {
  if (hint.index > 0 && hint.index < pool.count()) {
    try {
      if (pooled_constant(pool, hint.index) == c) return hint.index;
    } catch (const MalformedClass&) {
    }
  }
  struct Visitor {
    ConstantPool& pool;
    std::uint16_t operator()(std::int32_t v) const { return pool.intern_int(v); }
    std::uint16_t operator()(const constant::FloatBits& f) const { return pool.intern_float_bits(f.bits); }
    std::uint16_t operator()(std::int64_t v) const { return pool.intern_long(v); }
    std::uint16_t operator()(const constant::DoubleBits& d) const { return pool.intern_double_bits(d.bits); }
    std::uint16_t operator()(const constant::String& s) const { return pool.intern_string(s.value); }
    std::uint16_t operator()(const constant::Class& c) const { return pool.intern_class(c.name); }
    std::uint16_t operator()(const constant::MethodType& m) const { return pool.intern_method_type(m.descriptor); }
    std::uint16_t operator()(const constant::Pooled& p) const { return p.index; }
  };
  return std::visit(Visitor{pool}, c);
}

class Layout {
 public:
  Layout(const CodeBody& code, ConstantPool& pool) : code_(code), pool_(pool) {
    wide_.resize(code.insns.size(), false);
    ldc_index_.resize(code.insns.size(), 0);
    for (std::size_t i = 0; i < code.insns.size(); ++i) {
      const auto& insn = code.insns[i];
      if (const auto* j = insn.get_if<operand::Jump>()) wide_[i] = j->wide;
      if (const auto* l = insn.get_if<operand::Ldc>()) ldc_index_[i] = intern_constant(pool_, l->value, insn.pool_hint);
    }
    for (int round = 0;; ++round) {
      compute_offsets();
      if (!widen()) break;
      if (round > 64) throw EncodingOverflow("jump widening did not converge");
    }
  }

  std::uint32_t offset(std::size_t i) const { return offsets_[i]; }
  std::uint32_t code_length() const { return length_; }
  bool wide(std::size_t i) const { return wide_[i]; }
  std::uint16_t ldc_index(std::size_t i) const { return ldc_index_[i]; }

  std::uint32_t label_offset(Label l) const {
    auto it = label_offsets_.find(l);
    if (it == label_offsets_.end()) throw EncodingOverflow("reference to undefined label L" + std::to_string(l.id));
    return it->second;
  }

 private:
  std::size_t size_of(std::size_t i, std::uint32_t at) const {
    const Insn& insn = code_.insns[i];
    switch (insn.kind()) {
      case InsnKind::Label:
      case InsnKind::LineNumber: return 0;
      case InsnKind::Simple: return 1;
      case InsnKind::IntOperand: return insn.opcode == op::SIPUSH ? 3 : 2;
      case InsnKind::LocalVar: return var_size(insn.as<operand::LocalVar>(), insn.opcode);
      case InsnKind::Type:
      case InsnKind::Field: return 3;
      case InsnKind::Method: return insn.opcode == op::INVOKEINTERFACE ? 5 : 3;
      case InsnKind::InvokeDynamic: return 5;
      case InsnKind::Jump: return wide_[i] ? 5 : 3;
      case InsnKind::TableSwitch:
        return 1 + (4 - (at + 1) % 4) % 4 + 12 + 4 * insn.as<operand::TableSwitch>().targets.size();
      case InsnKind::LookupSwitch:
        return 1 + (4 - (at + 1) % 4) % 4 + 8 + 8 * insn.as<operand::LookupSwitch>().pairs.size();
      case InsnKind::Ldc: {
        const auto& l = insn.as<operand::Ldc>();
        if (is_category2(l.value) || l.wide || ldc_index_[i] > 255) return 3;
        return 2;
      }
      case InsnKind::Iinc: {
        const auto& v = insn.as<operand::Iinc>();
        return (v.wide || v.slot > 255 || v.delta < -128 || v.delta > 127) ? 6 : 3;
      }
      case InsnKind::MultiANewArray: return 4;
    }
    return 0;
  }

  void compute_offsets() {
    offsets_.assign(code_.insns.size(), 0);
    label_offsets_.clear();
    std::uint64_t at = 0;
    for (std::size_t i = 0; i < code_.insns.size(); ++i) {
      offsets_[i] = static_cast<std::uint32_t>(at);
      if (code_.insns[i].is_label()) label_offsets_[code_.insns[i].as<operand::Label>().label] = offsets_[i];
      at += size_of(i, static_cast<std::uint32_t>(at));
      if (at > 65535) throw EncodingOverflow("method code exceeds 65535 bytes");
    }
    length_ = static_cast<std::uint32_t>(at);
  }

  // Returns true if any goto/jsr had to switch to its 32-bit form.
  bool widen() {
    bool changed = false;
    for (std::size_t i = 0; i < code_.insns.size(); ++i) {
      const auto* j = code_.insns[i].get_if<operand::Jump>();
      if (j == nullptr || wide_[i]) continue;
      const std::int64_t rel = std::int64_t{label_offset(j->target)} - offsets_[i];
      if (rel >= std::numeric_limits<std::int16_t>::min() && rel <= std::numeric_limits<std::int16_t>::max()) continue;
      const Opcode o = code_.insns[i].opcode;
      if (o != op::GOTO && o != op::JSR)
        throw EncodingOverflow(std::string(mnemonic(o)) + " offset " + std::to_string(rel) +
                               " does not fit in 16 bits; widen conditional jumps before encoding");
      wide_[i] = true;
      changed = true;
    }
    return changed;
  }

  const CodeBody& code_;
  ConstantPool& pool_;
  std::vector<bool> wide_;
  std::vector<std::uint16_t> ldc_index_;
  std::vector<std::uint32_t> offsets_;
  std::map<Label, std::uint32_t> label_offsets_;
  std::uint32_t length_ = 0;
};

void write_vtype(ByteWriter& w, const VType& t, ConstantPool& pool, const Layout& layout,
                 const std::vector<PoolHint>& hints, std::size_t& ref_count) {
  switch (t.kind()) {
    case VType::Kind::Top: w.u1(kVtTop); break;
    case VType::Kind::Int: w.u1(kVtInt); break;
    case VType::Kind::Float: w.u1(kVtFloat); break;
    case VType::Kind::Double: w.u1(kVtDouble); break;
    case VType::Kind::Long: w.u1(kVtLong); break;
    case VType::Kind::Null: w.u1(kVtNull); break;
    case VType::Kind::UninitializedThis: w.u1(kVtUninitThis); break;
    case VType::Kind::Ref:
      w.u1(kVtObject);
      w.u2(pool.intern_class(t.class_name(), ref_count < hints.size() ? hints[ref_count] : PoolHint{}));
      ++ref_count;
      break;
    case VType::Kind::Uninitialized:
      w.u1(kVtUninit);
      w.u2(layout.label_offset(t.site()));
      break;
  }
}

Bytes encode_stack_map(const std::vector<StackMapFrame>& frames, ConstantPool& pool, const Layout& layout) {
  using T = StackMapFrame::Type;
  ByteWriter w;
  w.u2(static_cast<std::uint32_t>(frames.size()));
  std::int64_t prev = -1;
  for (const auto& f : frames) {
    const std::int64_t off = layout.label_offset(f.label);
    const std::int64_t delta = off - prev - 1;
    if (delta < 0) throw EncodingOverflow("stack map frames are not in increasing offset order");
    const auto d = static_cast<std::uint32_t>(delta);
    prev = off;
    std::size_t refs = 0;
    switch (f.type) {
      case T::Same:
        if (d <= 63) {
          w.u1(d);
        } else {
          w.u1(251);
          w.u2(d);
        }
        break;
      case T::SameLocals1StackItem:
        if (d <= 63) {
          w.u1(64 + d);
        } else {
          w.u1(247);
          w.u2(d);
        }
        write_vtype(w, f.stack.at(0), pool, layout, f.class_hints, refs);
        break;
      case T::Chop:
        w.u1(251u - f.chopped);
        w.u2(d);
        break;
      case T::Append:
        w.u1(251u + static_cast<std::uint32_t>(f.locals.size()));
        w.u2(d);
        for (const auto& t : f.locals) write_vtype(w, t, pool, layout, f.class_hints, refs);
        break;
      case T::Full:
        w.u1(255);
        w.u2(d);
        w.u2(static_cast<std::uint32_t>(f.locals.size()));
        for (const auto& t : f.locals) write_vtype(w, t, pool, layout, f.class_hints, refs);
        w.u2(static_cast<std::uint32_t>(f.stack.size()));
        for (const auto& t : f.stack) write_vtype(w, t, pool, layout, f.class_hints, refs);
        break;
    }
  }
  return std::move(w).take();
}

Bytes encode_local_vars(const std::vector<LocalVariable>& vars, ConstantPool& pool, const Layout& layout) {
  ByteWriter w;
  w.u2(static_cast<std::uint32_t>(vars.size()));
  for (const auto& v : vars) {
    const auto start = layout.label_offset(v.start);
    const auto end = layout.label_offset(v.end);
    if (end < start) throw EncodingOverflow("local variable range ends before it starts");
    w.u2(start);
    w.u2(end - start);
    w.u2(pool.intern_utf8(v.name, v.name_hint));
    w.u2(pool.intern_utf8(v.descriptor, v.descriptor_hint));
    w.u2(v.slot);
  }
  return std::move(w).take();
}

void write_branch2(ByteWriter& w, std::int64_t rel) {
  if (rel < std::numeric_limits<std::int16_t>::min() || rel > std::numeric_limits<std::int16_t>::max())
    throw EncodingOverflow("branch offset out of 16-bit range");
  w.u2(static_cast<std::uint32_t>(rel) & 0xFFFF);
}

}  // namespace

Bytes encode_code(const CodeBody& code, ConstantPool& pool) {
  const Layout layout(code, pool);
  ByteWriter c;
  for (std::size_t i = 0; i < code.insns.size(); ++i) {
    const Insn& insn = code.insns[i];
    const std::uint32_t at = layout.offset(i);
    const Opcode o = insn.opcode;
    auto rel = [&](Label l) { return std::int64_t{layout.label_offset(l)} - at; };
    switch (insn.kind()) {
      case InsnKind::Label:
      case InsnKind::LineNumber: break;
      case InsnKind::Simple: c.u1(o); break;
      case InsnKind::IntOperand:
        c.u1(o);
        if (o == op::SIPUSH)
          c.u2(static_cast<std::uint32_t>(insn.as<operand::Int>().value) & 0xFFFF);
        else
          c.u1(static_cast<std::uint32_t>(insn.as<operand::Int>().value) & 0xFF);
        break;
      case InsnKind::LocalVar: {
        const auto& v = insn.as<operand::LocalVar>();
        switch (var_size(v, o)) {
          case 1: {
            const bool store = o >= op::ISTORE;
            const int base = store ? op::ISTORE_0 : op::ILOAD_0;
            const int kind = o - (store ? op::ISTORE : op::ILOAD);
            c.u1(static_cast<std::uint32_t>(base + kind * 4 + v.slot));
            break;
          }
          case 2:
            c.u1(o);
            c.u1(v.slot);
            break;
          default:
            c.u1(op::WIDE);
            c.u1(o);
            c.u2(v.slot);
        }
        break;
      }
      case InsnKind::Type:
        c.u1(o);
        c.u2(pool.intern_class(insn.as<operand::Type>().type, insn.pool_hint));
        break;
      case InsnKind::Field:
        c.u1(o);
        c.u2(pool.intern_member(tag::Fieldref, insn.as<operand::Field>().ref, insn.pool_hint));
        break;
      case InsnKind::Method: {
        const auto& m = insn.as<operand::Method>();
        c.u1(o);
        c.u2(pool.intern_member(m.is_interface ? tag::InterfaceMethodref : tag::Methodref, m.ref, insn.pool_hint));
        if (o == op::INVOKEINTERFACE) {
          c.u1(static_cast<std::uint32_t>(parse_method_descriptor(m.ref.descriptor).param_slots() + 1));
          c.u1(0);
        }
        break;
      }
      case InsnKind::InvokeDynamic:
        c.u1(o);
        c.u2(insn.as<operand::InvokeDynamic>().pool_index);
        c.u2(0);
        break;
      case InsnKind::Jump: {
        const auto r = rel(insn.as<operand::Jump>().target);
        if (layout.wide(i)) {
          c.u1(o == op::GOTO ? op::GOTO_W : op::JSR_W);
          c.u4(static_cast<std::uint32_t>(r));
        } else {
          c.u1(o);
          write_branch2(c, r);
        }
        break;
      }
      case InsnKind::TableSwitch: {
        const auto& t = insn.as<operand::TableSwitch>();
        c.u1(o);
        for (std::uint32_t p = (4 - (at + 1) % 4) % 4; p > 0; --p) c.u1(0);
        c.u4(static_cast<std::uint32_t>(rel(t.default_target)));
        c.u4(static_cast<std::uint32_t>(t.low));
        c.u4(static_cast<std::uint32_t>(t.high));
        if (std::int64_t{t.high} - t.low + 1 != static_cast<std::int64_t>(t.targets.size()))
          throw EncodingOverflow("tableswitch target count does not match its range");
        for (const auto& l : t.targets) c.u4(static_cast<std::uint32_t>(rel(l)));
        break;
      }
      case InsnKind::LookupSwitch: {
        const auto& l = insn.as<operand::LookupSwitch>();
        c.u1(o);
        for (std::uint32_t p = (4 - (at + 1) % 4) % 4; p > 0; --p) c.u1(0);
        c.u4(static_cast<std::uint32_t>(rel(l.default_target)));
        c.u4(static_cast<std::uint32_t>(l.pairs.size()));
        for (const auto& [key, target] : l.pairs) {
          c.u4(static_cast<std::uint32_t>(key));
          c.u4(static_cast<std::uint32_t>(rel(target)));
        }
        break;
      }
      case InsnKind::Ldc: {
        const auto& l = insn.as<operand::Ldc>();
        const auto idx = layout.ldc_index(i);
        if (is_category2(l.value)) {
          c.u1(op::LDC2_W);
          c.u2(idx);
        } else if (l.wide || idx > 255) {
          c.u1(op::LDC_W);
          c.u2(idx);
        } else {
          c.u1(op::LDC);
          c.u1(idx);
        }
        break;
      }
      case InsnKind::Iinc: {
        const auto& v = insn.as<operand::Iinc>();
        if (v.wide || v.slot > 255 || v.delta < -128 || v.delta > 127) {
          c.u1(op::WIDE);
          c.u1(op::IINC);
          c.u2(v.slot);
          c.u2(static_cast<std::uint32_t>(v.delta) & 0xFFFF);
        } else {
          c.u1(op::IINC);
          c.u1(v.slot);
          c.u1(static_cast<std::uint32_t>(v.delta) & 0xFF);
        }
        break;
      }
      case InsnKind::MultiANewArray: {
        const auto& m = insn.as<operand::MultiANewArray>();
        c.u1(o);
        c.u2(pool.intern_class(m.type, insn.pool_hint));
        c.u1(m.dimensions);
        break;
      }
    }
  }
  if (c.size() != layout.code_length()) throw EncodingOverflow("internal layout mismatch");
  if (c.size() == 0) throw EncodingOverflow("method has an empty code array");

  ByteWriter w;
  w.u2(code.max_stack);
  w.u2(code.max_locals);
  w.u4(static_cast<std::uint32_t>(c.size()));
  w.bytes(c.data());
  w.u2(static_cast<std::uint32_t>(code.exception_table.size()));
  for (const auto& h : code.exception_table) {
    w.u2(layout.label_offset(h.start));
    w.u2(layout.label_offset(h.end));
    w.u2(layout.label_offset(h.handler));
    w.u2(h.catch_type ? pool.intern_class(*h.catch_type, h.catch_hint) : 0);
  }

  // Sub-attributes in their original order; newly present ones go last.
  std::vector<CodeBody::AttributeSlot> order = code.attribute_order;
  auto has = [&](CodeBody::Part p) {
    return std::any_of(order.begin(), order.end(), [&](const auto& s) { return s.part == p; });
  };
  const bool any_lines = std::any_of(code.insns.begin(), code.insns.end(),
                                     [](const Insn& i) { return i.kind() == InsnKind::LineNumber; });
  if (any_lines && !has(CodeBody::Part::LineNumbers)) order.push_back({CodeBody::Part::LineNumbers});
  if (!code.local_variables.empty() && !has(CodeBody::Part::LocalVariables))
    order.push_back({CodeBody::Part::LocalVariables});
  if (!code.local_variable_types.empty() && !has(CodeBody::Part::LocalVariableTypes))
    order.push_back({CodeBody::Part::LocalVariableTypes});
  if (code.stack_map && !has(CodeBody::Part::StackMap)) order.push_back({CodeBody::Part::StackMap});

  struct Out {
    std::string name;
    Bytes data;
    PoolHint hint;
  };
  std::vector<Out> attrs;
  for (const auto& slot : order) {
    switch (slot.part) {
      case CodeBody::Part::LineNumbers: {
        ByteWriter lw;
        const auto table = code.line_table();
        lw.u2(static_cast<std::uint32_t>(table.size()));
        for (const auto& [label, line] : table) {
          lw.u2(layout.label_offset(label));
          lw.u2(line);
        }
        attrs.push_back({"LineNumberTable", std::move(lw).take(), slot.name_index});
        break;
      }
      case CodeBody::Part::LocalVariables:
        attrs.push_back({"LocalVariableTable", encode_local_vars(code.local_variables, pool, layout), slot.name_index});
        break;
      case CodeBody::Part::LocalVariableTypes:
        attrs.push_back(
            {"LocalVariableTypeTable", encode_local_vars(code.local_variable_types, pool, layout), slot.name_index});
        break;
      case CodeBody::Part::StackMap:
        if (code.stack_map)
          attrs.push_back({"StackMapTable", encode_stack_map(*code.stack_map, pool, layout), slot.name_index});
        break;
      case CodeBody::Part::Raw: {
        const auto& raw = code.raw_attributes.at(slot.raw_index);
        attrs.push_back({raw.name, raw.data, raw.name_index});
        break;
      }
    }
  }
  w.u2(static_cast<std::uint32_t>(attrs.size()));
  for (const auto& a : attrs) {
    w.u2(pool.intern_utf8(a.name, a.hint));
    w.u4(static_cast<std::uint32_t>(a.data.size()));
    w.bytes(a.data);
  }
  return std::move(w).take();
}

}  // namespace cfweave::classfile
