#include "cfweave/analysis/frames.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

#include "cfweave/classfile/descriptor.hpp"
#include "cfweave/error.hpp"

namespace cfweave::analysis {

using namespace classfile;

namespace {

constexpr const char* kObject = "java/lang/Object";

// What a real instruction does to a frame: pop `pops` values, push
// `pushes`, then write `stores` into locals. `init` replaces every copy of
// an uninitialized value once its constructor has run.
struct Effect {
  std::size_t pops = 0;
  std::vector<VType> pushes;
  std::vector<std::pair<std::uint16_t, VType>> stores;
  std::optional<std::pair<VType, VType>> init;
};

// Label positions and handler ranges of one body.
struct Index {
  std::unordered_map<Label, std::size_t> label_pos;
  std::vector<std::size_t> next_real;
  struct Range {
    std::size_t start, end, handler;
    std::optional<std::string> catch_type;
  };
  std::vector<Range> handlers;

  explicit Index(const CodeBody& code) {
    const auto n = code.insns.size();
    for (std::size_t i = 0; i < n; ++i)
      if (code.insns[i].is_label()) label_pos.emplace(code.insns[i].as<operand::Label>().label, i);
    next_real.assign(n + 1, n);
    for (std::size_t i = n; i-- > 0;) next_real[i] = code.insns[i].is_real() ? i : next_real[i + 1];
    for (const auto& h : code.exception_table)
      handlers.push_back(Range{pos(h.start), pos(h.end), target(h.handler), h.catch_type});
  }

  std::size_t pos(Label l) const {
    auto it = label_pos.find(l);
    if (it == label_pos.end()) throw MalformedCode("reference to undefined label L" + std::to_string(l.id));
    return it->second;
  }
  std::size_t target(Label l) const {
    const auto r = next_real[pos(l)];
    if (r == next_real.size() - 1) throw MalformedCode("label L" + std::to_string(l.id) + " is past the last instruction");
    return r;
  }

  std::vector<Successor> successors(const CodeBody& code, std::size_t i) const {
    std::vector<Successor> out;
    const Insn& insn = code.insns[i];
    if (!ends_flow(insn.opcode)) {
      const auto next = next_real[i + 1];
      if (next == code.insns.size()) throw MalformedCode("execution falls off the end of the code");
      out.push_back(Successor{next});
    }
    for (const auto& l : insn.branch_targets()) {
      const auto t = target(l);
      if (std::none_of(out.begin(), out.end(), [&](const Successor& s) { return s.insn == t; }))
        out.push_back(Successor{t});
    }
    for (const auto& h : handlers)
      if (h.start <= i && i < h.end) out.push_back(Successor{h.handler, true, h.catch_type});
    return out;
  }
};

char letter(std::string_view field_desc) {
  switch (field_desc[0]) {
    case 'J': return 'J';
    case 'F': return 'F';
    case 'D': return 'D';
    case 'L':
    case '[': return 'A';
    default: return 'I';
  }
}

bool fits(const VType& v, char want) {
  switch (want) {
    case 'I': return v.kind() == VType::Kind::Int;
    case 'F': return v.kind() == VType::Kind::Float;
    case 'J': return v.kind() == VType::Kind::Long;
    case 'D': return v.kind() == VType::Kind::Double;
    case 'A': return v.is_reference();
    case '1': return !v.is_top() && !v.is_category2();
    case '2': return v.is_category2();
    default: return false;
  }
}

VType of_letter(char c) {
  switch (c) {
    case 'I': return VType::integer();
    case 'F': return VType::float_();
    case 'J': return VType::long_();
    case 'D': return VType::double_();
    default: return VType::top();
  }
}

std::string array_of(std::string_view element) {
  if (!element.empty() && element[0] == '[') return "[" + std::string(element);
  return "[L" + std::string(element) + ";";
}

VType constant_type(const Constant& c) {
  struct V {
    VType operator()(std::int32_t) const { return VType::integer(); }
    VType operator()(const constant::FloatBits&) const { return VType::float_(); }
    VType operator()(std::int64_t) const { return VType::long_(); }
    VType operator()(const constant::DoubleBits&) const { return VType::double_(); }
    VType operator()(const constant::String&) const { return VType::ref("java/lang/String"); }
    VType operator()(const constant::Class&) const { return VType::ref("java/lang/Class"); }
    VType operator()(const constant::MethodType&) const { return VType::ref("java/lang/invoke/MethodType"); }
    VType operator()(const constant::Pooled& p) const { return VType::from_descriptor(p.descriptor); }
  };
  return std::visit(V{}, c);
}

class Executor {
 public:
  Executor(const std::string& class_name, const CodeBody& code, std::size_t i, const Frame& in)
      : class_name_(class_name), code_(code), i_(i), insn_(code.insns[i]), in_(in) {}

  Effect run() {
    const Opcode o = insn_.opcode;
    switch (o) {
      case op::NOP: break;
      case op::ACONST_NULL: push(VType::null()); break;
      case op::ICONST_M1: case op::ICONST_0: case op::ICONST_1: case op::ICONST_2:
      case op::ICONST_3: case op::ICONST_4: case op::ICONST_5:
      case op::BIPUSH: case op::SIPUSH: push(VType::integer()); break;
      case op::LCONST_0: case op::LCONST_1: push(VType::long_()); break;
      case op::FCONST_0: case op::FCONST_1: case op::FCONST_2: push(VType::float_()); break;
      case op::DCONST_0: case op::DCONST_1: push(VType::double_()); break;
      case op::LDC: case op::LDC_W: case op::LDC2_W: push(constant_type(insn_.as<operand::Ldc>().value)); break;

      case op::ILOAD: load('I'); break;
      case op::LLOAD: load('J'); break;
      case op::FLOAD: load('F'); break;
      case op::DLOAD: load('D'); break;
      case op::ALOAD: load('A'); break;

      case op::IALOAD: case op::BALOAD: case op::CALOAD: case op::SALOAD: pop("AI"); push(VType::integer()); break;
      case op::LALOAD: pop("AI"); push(VType::long_()); break;
      case op::FALOAD: pop("AI"); push(VType::float_()); break;
      case op::DALOAD: pop("AI"); push(VType::double_()); break;
      case op::AALOAD: {
        pop("AI");
        push(element(peek(1)));
        break;
      }

      case op::ISTORE: store('I'); break;
      case op::LSTORE: store('J'); break;
      case op::FSTORE: store('F'); break;
      case op::DSTORE: store('D'); break;
      case op::ASTORE: store('A'); break;

      case op::IASTORE: case op::BASTORE: case op::CASTORE: case op::SASTORE: pop("AII"); break;
      case op::LASTORE: pop("AIJ"); break;
      case op::FASTORE: pop("AIF"); break;
      case op::DASTORE: pop("AID"); break;
      case op::AASTORE: pop("AIA"); break;

      case op::POP: pop("1"); break;
      case op::POP2: peek(0).is_category2() ? pop("2") : pop("11"); break;
      case op::DUP: pop("1"); repush({0, 0}); break;
      case op::DUP_X1: pop("11"); repush({0, 1, 0}); break;
      case op::DUP_X2:
        if (peek(1).is_category2()) {
          pop("21");
          repush({0, 1, 0});
        } else {
          pop("111");
          repush({0, 2, 1, 0});
        }
        break;
      case op::DUP2:
        if (peek(0).is_category2()) {
          pop("2");
          repush({0, 0});
        } else {
          pop("11");
          repush({1, 0, 1, 0});
        }
        break;
      case op::DUP2_X1:
        if (peek(0).is_category2()) {
          pop("12");
          repush({0, 1, 0});
        } else {
          pop("111");
          repush({1, 0, 2, 1, 0});
        }
        break;
      case op::DUP2_X2:
        if (peek(0).is_category2()) {
          if (peek(1).is_category2()) {
            pop("22");
            repush({0, 1, 0});
          } else {
            pop("112");
            repush({0, 2, 1, 0});
          }
        } else if (peek(2).is_category2()) {
          pop("211");
          repush({1, 0, 2, 1, 0});
        } else {
          pop("1111");
          repush({1, 0, 3, 2, 1, 0});
        }
        break;
      case op::SWAP: pop("11"); repush({0, 1}); break;

      case op::IADD: case op::LADD: case op::FADD: case op::DADD: case op::ISUB: case op::LSUB: case op::FSUB:
      case op::DSUB: case op::IMUL: case op::LMUL: case op::FMUL: case op::DMUL: case op::IDIV: case op::LDIV:
      case op::FDIV: case op::DDIV: case op::IREM: case op::LREM: case op::FREM: case op::DREM: {
        const char t = "IJFD"[(o - op::IADD) % 4];
        pop(std::string(2, t));
        push(of_letter(t));
        break;
      }
      case op::INEG: case op::LNEG: case op::FNEG: case op::DNEG: {
        const char t = "IJFD"[o - op::INEG];
        unary(t, t);
        break;
      }
      case op::ISHL: case op::ISHR: case op::IUSHR: pop("II"); push(VType::integer()); break;
      case op::LSHL: case op::LSHR: case op::LUSHR: pop("JI"); push(VType::long_()); break;
      case op::IAND: case op::IOR: case op::IXOR: pop("II"); push(VType::integer()); break;
      case op::LAND: case op::LOR: case op::LXOR: pop("JJ"); push(VType::long_()); break;

      case op::IINC: {
        const auto slot = insn_.as<operand::Iinc>().slot;
        if (!fits(local(slot), 'I')) fail("local " + std::to_string(slot) + " holds " + local(slot).to_string());
        break;
      }
      case op::I2L: unary('I', 'J'); break;
      case op::I2F: unary('I', 'F'); break;
      case op::I2D: unary('I', 'D'); break;
      case op::L2I: unary('J', 'I'); break;
      case op::L2F: unary('J', 'F'); break;
      case op::L2D: unary('J', 'D'); break;
      case op::F2I: unary('F', 'I'); break;
      case op::F2L: unary('F', 'J'); break;
      case op::F2D: unary('F', 'D'); break;
      case op::D2I: unary('D', 'I'); break;
      case op::D2L: unary('D', 'J'); break;
      case op::D2F: unary('D', 'F'); break;
      case op::I2B: case op::I2C: case op::I2S: unary('I', 'I'); break;
      case op::LCMP: pop("JJ"); push(VType::integer()); break;
      case op::FCMPL: case op::FCMPG: pop("FF"); push(VType::integer()); break;
      case op::DCMPL: case op::DCMPG: pop("DD"); push(VType::integer()); break;

      case op::IFEQ: case op::IFNE: case op::IFLT: case op::IFGE: case op::IFGT: case op::IFLE: pop("I"); break;
      case op::IF_ICMPEQ: case op::IF_ICMPNE: case op::IF_ICMPLT: case op::IF_ICMPGE: case op::IF_ICMPGT:
      case op::IF_ICMPLE: pop("II"); break;
      case op::IF_ACMPEQ: case op::IF_ACMPNE: pop("AA"); break;
      case op::IFNULL: case op::IFNONNULL: pop("A"); break;
      case op::GOTO: case op::GOTO_W: break;
      case op::JSR: case op::JSR_W: case op::RET:
        throw MalformedCode(where() + ": subroutines (jsr/ret) are not supported");
      case op::TABLESWITCH: case op::LOOKUPSWITCH: pop("I"); break;
      case op::IRETURN: pop("I"); break;
      case op::LRETURN: pop("J"); break;
      case op::FRETURN: pop("F"); break;
      case op::DRETURN: pop("D"); break;
      case op::ARETURN: pop("A"); break;
      case op::RETURN: break;

      case op::GETSTATIC: push(VType::from_descriptor(insn_.as<operand::Field>().ref.descriptor)); break;
      case op::PUTSTATIC: pop(std::string(1, letter(insn_.as<operand::Field>().ref.descriptor))); break;
      case op::GETFIELD:
        pop("A");
        push(VType::from_descriptor(insn_.as<operand::Field>().ref.descriptor));
        break;
      case op::PUTFIELD: pop(std::string("A") + letter(insn_.as<operand::Field>().ref.descriptor)); break;

      case op::INVOKEVIRTUAL: case op::INVOKESPECIAL: case op::INVOKESTATIC: case op::INVOKEINTERFACE: {
        const auto& ref = insn_.as<operand::Method>().ref;
        invoke(ref.descriptor, o != op::INVOKESTATIC, o == op::INVOKESPECIAL && ref.name == "<init>");
        break;
      }
      case op::INVOKEDYNAMIC: invoke(insn_.as<operand::InvokeDynamic>().descriptor, false, false); break;

      case op::NEW: push(VType::uninitialized(site())); break;
      case op::NEWARRAY: {
        pop("I");
        static constexpr const char* kArrays[] = {"[Z", "[C", "[F", "[D", "[B", "[S", "[I", "[J"};
        const auto code = insn_.as<operand::Int>().value;
        if (code < 4 || code > 11) fail("bad newarray type " + std::to_string(code));
        push(VType::ref(kArrays[code - 4]));
        break;
      }
      case op::ANEWARRAY: pop("I"); push(VType::ref(array_of(insn_.as<operand::Type>().type))); break;
      case op::ARRAYLENGTH: pop("A"); push(VType::integer()); break;
      case op::ATHROW: pop("A"); break;
      case op::CHECKCAST: pop("A"); push(VType::ref(insn_.as<operand::Type>().type)); break;
      case op::INSTANCEOF: pop("A"); push(VType::integer()); break;
      case op::MONITORENTER: case op::MONITOREXIT: pop("A"); break;
      case op::MULTIANEWARRAY: {
        const auto& m = insn_.as<operand::MultiANewArray>();
        pop(std::string(m.dimensions, 'I'));
        push(VType::ref(m.type));
        break;
      }
      default: fail("unexpected opcode");
    }
    return std::move(e_);
  }

 private:
  std::string where() const {
    return "#" + std::to_string(i_) + " " + std::string(mnemonic(insn_.opcode));
  }
  [[noreturn]] void fail(const std::string& what) const { throw TypeConflict(where() + ": " + what); }

  // Value `depth` entries below the top of the incoming stack.
  const VType& peek(std::size_t depth) const {
    if (depth >= in_.stack.size()) fail("stack underflow");
    return in_.stack[in_.stack.size() - 1 - depth];
  }

  const VType& local(std::uint16_t slot) const {
    if (slot >= in_.locals.size()) fail("local " + std::to_string(slot) + " out of range");
    return in_.locals[slot];
  }

  // `sig` lists the popped values bottom to top.
  void pop(std::string_view sig) {
    if (in_.stack.size() < sig.size()) fail("stack underflow");
    const auto base = in_.stack.size() - sig.size();
    for (std::size_t k = 0; k < sig.size(); ++k) {
      const auto& v = in_.stack[base + k];
      if (!fits(v, sig[k])) fail("operand " + std::to_string(k) + " is " + v.to_string());
    }
    e_.pops = sig.size();
  }

  void push(VType v) { e_.pushes.push_back(std::move(v)); }

  // Pushes copies of popped values, named by depth below the old top.
  void repush(std::initializer_list<std::size_t> depths) {
    for (auto d : depths) push(peek(d));
  }

  void unary(char from, char to) {
    pop(std::string(1, from));
    push(of_letter(to));
  }

  void load(char want) {
    const auto slot = insn_.as<operand::LocalVar>().slot;
    const VType& v = local(slot);
    if (!fits(v, want)) fail("local " + std::to_string(slot) + " holds " + v.to_string());
    push(v);
  }

  void store(char want) {
    const auto slot = insn_.as<operand::LocalVar>().slot;
    pop(std::string(1, want));
    const std::size_t need = slot + (want == 'J' || want == 'D' ? 2u : 1u);
    if (need > in_.locals.size()) fail("local " + std::to_string(slot) + " out of range");
    e_.stores.emplace_back(slot, peek(0));
  }

  VType element(const VType& array) const {
    if (array.kind() == VType::Kind::Null) return VType::null();
    const auto& name = array.class_name();
    if (array.kind() != VType::Kind::Ref || name.size() < 2 || name[0] != '[') fail("not an array: " + array.to_string());
    if (name[1] == '[') return VType::ref(name.substr(1));
    if (name[1] == 'L') return VType::ref(name.substr(2, name.size() - 3));
    fail("aaload from " + name);
  }

  void invoke(const std::string& desc, bool has_receiver, bool is_init) {
    const auto md = parse_method_descriptor(desc);
    std::string sig = has_receiver ? "A" : "";
    for (const auto& p : md.params) sig += letter(p);
    pop(sig);
    if (is_init) {
      const VType& receiver = peek(md.params.size());
      if (receiver.kind() == VType::Kind::UninitializedThis) {
        e_.init.emplace(receiver, VType::ref(class_name_));
      } else if (receiver.kind() == VType::Kind::Uninitialized) {
        const auto at = code_.find_label(receiver.site());
        std::size_t k = at;
        while (k < code_.insns.size() && !code_.insns[k].is_real()) ++k;
        if (at == static_cast<std::size_t>(-1) || k == code_.insns.size() || code_.insns[k].opcode != op::NEW)
          fail("allocation site L" + std::to_string(receiver.site().id) + " is not a new");
        e_.init.emplace(receiver, VType::ref(code_.insns[k].as<operand::Type>().type));
      } else {
        fail("constructor called on " + receiver.to_string());
      }
    }
    if (md.ret != "V") push(VType::from_descriptor(md.ret));
  }

  Label site() const {
    for (std::size_t k = i_; k-- > 0;) {
      const Insn& p = code_.insns[k];
      if (p.is_real()) break;
      if (p.is_label()) return p.as<operand::Label>().label;
    }
    fail("new without a label in front of it");
  }

  const std::string& class_name_;
  const CodeBody& code_;
  std::size_t i_;
  const Insn& insn_;
  const Frame& in_;
  Effect e_;
};

Frame apply(const Frame& in, const Effect& e) {
  Frame out = in;
  out.stack.resize(out.stack.size() - e.pops);
  if (e.init) {
    for (auto& v : out.stack)
      if (v == e.init->first) v = e.init->second;
    for (auto& v : out.locals)
      if (v == e.init->first) v = e.init->second;
  }
  for (const auto& p : e.pushes) out.stack.push_back(p);
  for (const auto& [slot, v] : e.stores) {
    if (slot > 0 && out.locals[slot - 1].is_category2()) out.locals[slot - 1] = VType::top();
    out.locals[slot] = v;
    if (v.is_category2()) out.locals[slot + 1] = VType::top();
  }
  return out;
}

using Sources = std::vector<std::size_t>;

Sources unite(const Sources& a, const Sources& b) {
  Sources out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

const CodeBody& body_of(const MethodModel& m) {
  if (!m.code) throw MalformedCode(m.name + m.descriptor + ": method has no code");
  return *m.code;
}

// Worklist fixpoint shared by the typed and the producer analyses.
template <class State, class Transfer, class Enter, class Join>
std::vector<std::optional<State>> solve(const CodeBody& code, const Index& index, State initial, Transfer transfer,
                                        Enter enter_handler, Join join) {
  const auto n = code.insns.size();
  std::vector<std::optional<State>> states(n);
  const auto start = index.next_real[0];
  if (start == n) throw MalformedCode("method body has no instructions");
  states[start] = std::move(initial);
  std::set<std::size_t> work{start};
  while (!work.empty()) {
    const auto i = *work.begin();
    work.erase(work.begin());
    const State in = *states[i];
    std::optional<State> out;
    for (const auto& s : index.successors(code, i)) {
      State incoming;
      if (s.handler) {
        incoming = enter_handler(in, s.catch_type);
      } else {
        if (!out) out = transfer(i, in);
        incoming = *out;
      }
      auto& slot = states[s.insn];
      if (!slot) {
        slot = std::move(incoming);
        work.insert(s.insn);
      } else {
        State merged = join(*slot, incoming);
        if (!(merged == *slot)) {
          slot = std::move(merged);
          work.insert(s.insn);
        }
      }
    }
  }
  for (std::size_t i = n; i-- > 0;)
    if (!code.insns[i].is_real() && index.next_real[i] < n) states[i] = states[index.next_real[i]];
  return states;
}

std::string method_id(const std::string& cls, const MethodModel& m) { return cls + "." + m.name + m.descriptor; }

}  // namespace

int Frame::stack_slots() const {
  int n = 0;
  for (const auto& v : stack) n += v.size();
  return n;
}

Analyzer::Analyzer(std::string class_name, const ClassHierarchy& hierarchy, bool strict)
    : class_name_(std::move(class_name)), hierarchy_(hierarchy), strict_(strict) {}

std::uint16_t scan_max_locals(const MethodModel& method) {
  int n = parse_method_descriptor(method.descriptor).param_slots() + (method.is_static() ? 0 : 1);
  if (method.code) {
    for (const auto& insn : method.code->insns) {
      if (const auto* v = insn.get_if<operand::LocalVar>()) {
        const bool wide = insn.opcode == op::LLOAD || insn.opcode == op::DLOAD || insn.opcode == op::LSTORE ||
                          insn.opcode == op::DSTORE;
        n = std::max(n, v->slot + (wide ? 2 : 1));
      } else if (const auto* c = insn.get_if<operand::Iinc>()) {
        n = std::max(n, c->slot + 1);
      }
    }
  }
  return static_cast<std::uint16_t>(n);
}

Frame Analyzer::initial_frame(const MethodModel& method) const {
  const auto& code = body_of(method);
  const std::size_t size = std::max<std::size_t>(code.max_locals, scan_max_locals(method));
  Frame f;
  f.locals.assign(size, VType::top());
  std::size_t slot = 0;
  if (!method.is_static()) {
    f.locals[slot++] = (method.is_constructor() && class_name_ != kObject) ? VType::uninitialized_this()
                                                                              : VType::ref(class_name_);
  }
  for (const auto& p : parse_method_descriptor(method.descriptor).params) {
    auto t = VType::from_descriptor(p);
    f.locals[slot] = t;
    slot += t.size();
  }
  return f;
}

Frame Analyzer::execute(const CodeBody& code, std::size_t i, const Frame& in) const {
  return apply(in, Executor(class_name_, code, i, in).run());
}

VType Analyzer::merge(const VType& a, const VType& b) const {
  if (a == b) return a;
  using K = VType::Kind;
  if (a.kind() == K::Null && b.kind() == K::Ref) return b;
  if (b.kind() == K::Null && a.kind() == K::Ref) return a;
  if (a.kind() == K::Ref && b.kind() == K::Ref) {
    auto common = hierarchy_.common_superclass(a.class_name(), b.class_name());
    if (!common) {
      if (strict_)
        throw ResolutionFailure("cannot resolve the common superclass of " + a.class_name() + " and " +
                                b.class_name());
      common = kObject;
    }
    return VType::ref(*common);
  }
  return VType::top();
}

Frame Analyzer::merge(const Frame& a, const Frame& b) const {
  if (a.stack.size() != b.stack.size())
    throw TypeConflict("stack heights " + std::to_string(a.stack.size()) + " and " + std::to_string(b.stack.size()) +
                       " meet");
  Frame out;
  out.locals.resize(std::max(a.locals.size(), b.locals.size()));
  for (std::size_t k = 0; k < out.locals.size(); ++k)
    out.locals[k] = (k < a.locals.size() && k < b.locals.size()) ? merge(a.locals[k], b.locals[k]) : VType::top();
  out.stack.reserve(a.stack.size());
  for (std::size_t k = 0; k < a.stack.size(); ++k) {
    auto v = merge(a.stack[k], b.stack[k]);
    if (v.is_top())
      throw TypeConflict("stack entry " + std::to_string(k) + " merges " + a.stack[k].to_string() + " with " +
                         b.stack[k].to_string());
    out.stack.push_back(std::move(v));
  }
  return out;
}

Frame Analyzer::handler_frame(const Frame& at, const std::optional<std::string>& catch_type) {
  Frame f;
  f.locals = at.locals;
  f.stack.push_back(VType::ref(catch_type.value_or("java/lang/Throwable")));
  return f;
}

std::vector<Successor> Analyzer::successors(const CodeBody& code, std::size_t i) {
  return Index(code).successors(code, i);
}

Frames Analyzer::basic_frames(const MethodModel& method) const {
  const auto& code = body_of(method);
  try {
    const Index index(code);
    return solve<Frame>(
        code, index, initial_frame(method), [&](std::size_t i, const Frame& in) { return execute(code, i, in); },
        [](const Frame& in, const std::optional<std::string>& t) { return handler_frame(in, t); },
        [&](const Frame& a, const Frame& b) { return merge(a, b); });
  } catch (const TypeConflict& e) {
    throw TypeConflict(method_id(class_name_, method) + ": " + e.what());
  } catch (const MalformedCode& e) {
    throw MalformedCode(method_id(class_name_, method) + ": " + e.what());
  }
}

SourceFrames Analyzer::source_frames(const MethodModel& method) const {
  const auto& code = body_of(method);
  const auto types = basic_frames(method);
  const Index index(code);
  const auto init = initial_frame(method);
  SourceFrame start;
  start.locals.assign(init.locals.size(), {});
  auto transfer = [&](std::size_t i, const SourceFrame& in) {
    const Frame& typed = *types[i];
    const Effect e = Executor(class_name_, code, i, typed).run();
    SourceFrame out = in;
    out.stack.resize(out.stack.size() - e.pops);
    for (std::size_t k = 0; k < e.pushes.size(); ++k) out.stack.push_back(Sources{i});
    for (const auto& [slot, v] : e.stores) {
      if (slot > 0 && typed.locals[slot - 1].is_category2()) out.locals[slot - 1].clear();
      out.locals[slot] = Sources{i};
      if (v.is_category2()) out.locals[slot + 1] = Sources{i};
    }
    return out;
  };
  auto enter = [](const SourceFrame& in, const std::optional<std::string>&) {
    SourceFrame f;
    f.locals = in.locals;
    f.stack.emplace_back();
    return f;
  };
  auto join = [](const SourceFrame& a, const SourceFrame& b) {
    SourceFrame out;
    out.locals.resize(a.locals.size());
    for (std::size_t k = 0; k < a.locals.size(); ++k) out.locals[k] = unite(a.locals[k], b.locals[k]);
    out.stack.resize(a.stack.size());
    for (std::size_t k = 0; k < a.stack.size(); ++k) out.stack[k] = unite(a.stack[k], b.stack[k]);
    return out;
  };
  return solve<SourceFrame>(code, index, std::move(start), transfer, enter, join);
}

MaxValues Analyzer::recompute_max(const MethodModel& method) const {
  return recompute_max(method, basic_frames(method));
}

MaxValues Analyzer::recompute_max(const MethodModel& method, const Frames& frames) const {
  const auto& code = body_of(method);
  int stack = 0;
  for (std::size_t i = 0; i < code.insns.size(); ++i) {
    if (!code.insns[i].is_real() || !frames[i]) continue;
    stack = std::max(stack, frames[i]->stack_slots());
    stack = std::max(stack, execute(code, i, *frames[i]).stack_slots());
  }
  return MaxValues{static_cast<std::uint16_t>(stack), scan_max_locals(method)};
}

std::vector<VType> compact_locals(const std::vector<VType>& slots) {
  std::vector<VType> out;
  for (std::size_t k = 0; k < slots.size(); k += slots[k].size()) out.push_back(slots[k]);
  while (!out.empty() && out.back().is_top()) out.pop_back();
  return out;
}

std::vector<StackMapFrame> Analyzer::compute_stack_map(const MethodModel& method, const Frames& frames) const {
  const auto& code = body_of(method);
  const Index index(code);
  std::set<std::size_t> targets;
  for (const auto& insn : code.insns)
    for (const auto& l : insn.branch_targets()) targets.insert(index.target(l));
  for (const auto& h : index.handlers) targets.insert(h.handler);

  std::vector<StackMapFrame> out;
  auto prev = compact_locals(initial_frame(method).locals);
  for (const auto t : targets) {
    if (!frames[t])
      throw TypeConflict(method_id(class_name_, method) + ": frame needed at unreachable #" + std::to_string(t));
    Label label;
    for (std::size_t k = t; k-- > 0 && !code.insns[k].is_real();)
      if (code.insns[k].is_label()) label = code.insns[k].as<operand::Label>().label;
    if (!label.valid()) throw MalformedCode(method_id(class_name_, method) + ": no label at #" + std::to_string(t));

    StackMapFrame f;
    f.label = label;
    auto locals = compact_locals(frames[t]->locals);
    const auto& stack = frames[t]->stack;
    const bool prefix_of_prev = locals.size() <= prev.size() && std::equal(locals.begin(), locals.end(), prev.begin());
    const bool extends_prev = prev.size() <= locals.size() && std::equal(prev.begin(), prev.end(), locals.begin());
    if (locals == prev && stack.empty()) {
      f.type = StackMapFrame::Type::Same;
    } else if (locals == prev && stack.size() == 1) {
      f.type = StackMapFrame::Type::SameLocals1StackItem;
      f.stack = stack;
    } else if (stack.empty() && prefix_of_prev && prev.size() - locals.size() <= 3) {
      f.type = StackMapFrame::Type::Chop;
      f.chopped = static_cast<std::uint8_t>(prev.size() - locals.size());
    } else if (stack.empty() && extends_prev && locals.size() - prev.size() <= 3) {
      f.type = StackMapFrame::Type::Append;
      f.locals.assign(locals.begin() + static_cast<std::ptrdiff_t>(prev.size()), locals.end());
    } else {
      f.type = StackMapFrame::Type::Full;
      f.locals = locals;
      f.stack = stack;
    }
    out.push_back(std::move(f));
    prev = std::move(locals);
  }
  return out;
}

std::size_t remove_unreachable(CodeBody& code, const Frames& frames) {
  std::vector<Insn> kept;
  kept.reserve(code.insns.size());
  std::size_t removed = 0;
  for (std::size_t i = 0; i < code.insns.size(); ++i) {
    if (code.insns[i].is_real() && !frames[i]) {
      ++removed;
      continue;
    }
    kept.push_back(std::move(code.insns[i]));
  }
  code.insns = std::move(kept);
  renumber(code.insns);
  if (removed == 0) return 0;

  std::unordered_map<Label, std::size_t> pos;
  for (std::size_t i = 0; i < code.insns.size(); ++i)
    if (code.insns[i].is_label()) pos.emplace(code.insns[i].as<operand::Label>().label, i);
  std::erase_if(code.exception_table, [&](const ExceptionHandler& h) {
    for (auto i = pos.at(h.start); i < pos.at(h.end); ++i)
      if (code.insns[i].is_real()) return false;
    return true;
  });
  return removed;
}

void ensure_new_labels(CodeBody& code) {
  std::vector<Insn> out;
  out.reserve(code.insns.size());
  bool label_since_real = false;
  for (auto& insn : code.insns) {
    if (insn.is_label()) label_since_real = true;
    if (insn.opcode == op::NEW && insn.is_real() && !label_since_real) out.push_back(Insn::label(code.new_label()));
    if (insn.is_real()) label_since_real = false;
    out.push_back(std::move(insn));
  }
  code.insns = std::move(out);
  renumber(code.insns);
}

}  // namespace cfweave::analysis
