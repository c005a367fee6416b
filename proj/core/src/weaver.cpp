#include "cfweave/weaver/weaver.hpp"

#include <algorithm>
#include <cstring>

#include "cfweave/classfile/descriptor.hpp"
#include "cfweave/error.hpp"

namespace cfweave::weaver {

using namespace classfile;
using joinpoint::Kind;
using joinpoint::Side;
using Handle = DynamicValue::Handle;

namespace {

bool is_method_call_kind(Kind k) { return k == Kind::BeforeMethodCall || k == Kind::AfterMethodCall; }
bool is_method_kind(Kind k) { return k == Kind::OnMethodEnter || k == Kind::OnMethodExit; }

bool is_primitive_descriptor(const std::string& d) {
  return d.size() == 1 && std::strchr("ZBCSIJFD", d[0]) != nullptr;
}

VType primitive_type(const std::string& d) {
  switch (d.empty() ? 'V' : d[0]) {
    case 'J': return VType::long_();
    case 'F': return VType::float_();
    case 'D': return VType::double_();
    default: return VType::integer();
  }
}

std::string primitive_descriptor(const Primitive& p) {
  switch (p.index()) {
    case 0: return "I";
    case 1: return "J";
    case 2: return "F";
    case 3: return "D";
    default: return "Z";
  }
}

void require_usable(const VType& t, const std::string& what) {
  if (t.is_top()) throw UnavailableValue(what + " holds no value here");
  if (t.kind() == VType::Kind::Uninitialized || t.kind() == VType::Kind::UninitializedThis)
    throw UnavailableValue(what + " is not initialized yet");
}

const joinpoint::MethodCallCtx& call_of(const Joinpoint& jp) {
  return *std::get<const joinpoint::MethodCallCtx*>(jp.context);
}

bool is_constructor_call(const joinpoint::MethodCallCtx& mc) {
  return mc.ins->opcode == op::INVOKESPECIAL && mc.method_name == "<init>";
}

// Values of a call on the stack: receiver first, then the arguments.
std::vector<VType> call_operand_types(const joinpoint::MethodCallCtx& mc) {
  std::vector<VType> out;
  if (!mc.is_static) out.push_back(VType::ref(mc.method_owner));
  for (const auto& p : parse_method_descriptor(mc.descriptor).params) out.push_back(VType::from_descriptor(p));
  return out;
}

}  // namespace

// ---- values ----

std::string DynamicValue::param_descriptor() const {
  if (is_primitive_descriptor(descriptor)) return descriptor;
  return type.erased_descriptor();
}

Insn load_insn(const VType& type, std::uint16_t slot) {
  switch (type.kind()) {
    case VType::Kind::Int: return Insn::var(op::ILOAD, slot);
    case VType::Kind::Long: return Insn::var(op::LLOAD, slot);
    case VType::Kind::Float: return Insn::var(op::FLOAD, slot);
    case VType::Kind::Double: return Insn::var(op::DLOAD, slot);
    case VType::Kind::Top: throw UnavailableValue("cannot load an undefined local");
    default: return Insn::var(op::ALOAD, slot);
  }
}

Insn store_insn(const VType& type, std::uint16_t slot) {
  switch (type.kind()) {
    case VType::Kind::Int: return Insn::var(op::ISTORE, slot);
    case VType::Kind::Long: return Insn::var(op::LSTORE, slot);
    case VType::Kind::Float: return Insn::var(op::FSTORE, slot);
    case VType::Kind::Double: return Insn::var(op::DSTORE, slot);
    case VType::Kind::Top: throw UnavailableValue("cannot store an undefined value");
    default: return Insn::var(op::ASTORE, slot);
  }
}

std::vector<Insn> push_constant(const Primitive& value) {
  return std::visit(
      [](auto v) -> std::vector<Insn> {
        using T = decltype(v);
        if constexpr (std::is_same_v<T, bool>) {
          return {Insn::simple(v ? op::ICONST_1 : op::ICONST_0)};
        } else if constexpr (std::is_same_v<T, std::int32_t>) {
          return {push_int(v)};
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          if (v == 0 || v == 1) return {Insn::simple(static_cast<Opcode>(op::LCONST_0 + v))};
          return {Insn::ldc(v)};
        } else if constexpr (std::is_same_v<T, float>) {
          std::uint32_t bits;
          std::memcpy(&bits, &v, sizeof bits);
          if (bits == 0 || v == 1.0f || v == 2.0f) return {Insn::simple(static_cast<Opcode>(op::FCONST_0 + static_cast<int>(v)))};
          return {Insn::ldc(constant::FloatBits{bits})};
        } else {
          std::uint64_t bits;
          std::memcpy(&bits, &v, sizeof bits);
          if (bits == 0 || v == 1.0) return {Insn::simple(static_cast<Opcode>(op::DCONST_0 + static_cast<int>(v)))};
          return {Insn::ldc(constant::DoubleBits{bits})};
        }
      },
      value);
}

// ---- static invocation ----

StaticInvocation& StaticInvocation::add_param(DynamicValue v) {
  params_.emplace_back(std::move(v));
  return *this;
}
StaticInvocation& StaticInvocation::add_param(std::int32_t v) {
  params_.emplace_back(v);
  return *this;
}
StaticInvocation& StaticInvocation::add_param(std::int64_t v) {
  params_.emplace_back(v);
  return *this;
}
StaticInvocation& StaticInvocation::add_param(float v) {
  params_.emplace_back(v);
  return *this;
}
StaticInvocation& StaticInvocation::add_param(double v) {
  params_.emplace_back(v);
  return *this;
}
StaticInvocation& StaticInvocation::add_param(bool v) {
  params_.emplace_back(v);
  return *this;
}
StaticInvocation& StaticInvocation::add_param(std::string v) {
  params_.emplace_back(std::move(v));
  return *this;
}

StaticInvocation& StaticInvocation::add_param(const std::any& v) {
  if (const auto* p = std::any_cast<DynamicValue>(&v)) return add_param(*p);
  if (const auto* p = std::any_cast<std::int32_t>(&v)) return add_param(*p);
  if (const auto* p = std::any_cast<std::int64_t>(&v)) return add_param(*p);
  if (const auto* p = std::any_cast<float>(&v)) return add_param(*p);
  if (const auto* p = std::any_cast<double>(&v)) return add_param(*p);
  if (const auto* p = std::any_cast<bool>(&v)) return add_param(*p);
  if (const auto* p = std::any_cast<std::string>(&v)) return add_param(*p);
  if (const auto* p = std::any_cast<const char*>(&v)) return add_param(std::string(*p));
  throw RegistrationError(owner_ + "." + method_ + ": unsupported parameter type " + v.type().name());
}

std::string StaticInvocation::descriptor() const {
  std::string d = "(";
  for (const auto& p : params_) {
    switch (p.index()) {
      case 0: d += std::get<DynamicValue>(p).param_descriptor(); break;
      case 1: d += "I"; break;
      case 2: d += "J"; break;
      case 3: d += "F"; break;
      case 4: d += "D"; break;
      case 5: d += "Z"; break;
      default: d += "Ljava/lang/String;"; break;
    }
  }
  return d + ")V";
}

// ---- dynamic context ----

const analysis::Frame& DynamicContext::frame() const { return weaver_.frame_at(jp_); }

DynamicValue DynamicContext::get_this() const {
  const auto& view = weaver_.view_;
  DynamicValue v;
  v.handle = Handle::This;
  v.origin = serial_;
  if (view.method.is_static()) {
    v.type = VType::null();
    return v;
  }
  const auto& f = frame();
  if (!f.locals.empty() && f.locals[0].kind() == VType::Kind::UninitializedThis)
    throw UnavailableValue(view.ctx.name + ": this is not initialized yet");
  v.type = VType::ref(view.ctx.class_ctx->name);
  return v;
}

DynamicValue DynamicContext::get_local_variable(int slot) const {
  const auto& f = frame();
  if (slot < 0 || static_cast<std::size_t>(slot) >= f.locals.size())
    throw UnavailableValue("local " + std::to_string(slot) + " does not exist here");
  DynamicValue v;
  v.handle = Handle::LocalVariable;
  v.index = slot;
  v.type = f.locals[slot];
  v.origin = serial_;
  require_usable(v.type, "local " + std::to_string(slot));
  return v;
}

DynamicValue DynamicContext::get_stack_value(int depth) const {
  const auto& f = frame();
  if (depth < 0 || static_cast<std::size_t>(depth) >= f.stack.size())
    throw UnavailableValue("stack depth " + std::to_string(depth) + " exceeds the stack height " +
                           std::to_string(f.stack.size()));
  DynamicValue v;
  v.handle = Handle::StackValue;
  v.index = depth;
  v.type = f.stack[f.stack.size() - 1 - depth];
  v.origin = serial_;
  require_usable(v.type, "stack value " + std::to_string(depth));
  return v;
}

DynamicValue DynamicContext::get_instance_field(const std::string& name) const {
  const ClassModel& cls = *weaver_.view_.ctx.class_ctx->model;
  const FieldModel* field = cls.find_field(name);
  if (field == nullptr || field->access.has(acc::STATIC))
    throw RegistrationError(cls.this_class + " has no instance field " + name);
  const DynamicValue self = get_this();
  if (self.type.kind() == VType::Kind::Null) throw UnavailableValue("no receiver in a static method");
  DynamicValue v;
  v.handle = Handle::InstanceFieldOfThis;
  v.owner = cls.this_class;
  v.name = name;
  v.descriptor = field->descriptor;
  v.type = VType::from_descriptor(field->descriptor);
  v.origin = serial_;
  return v;
}

DynamicValue DynamicContext::get_instance_field(const DynamicValue& base, const std::string& owner,
                                                const std::string& name, const std::string& descriptor) const {
  if (!base.type.is_reference()) throw RegistrationError("field base is not a reference");
  DynamicValue v;
  v.handle = Handle::InstanceFieldOf;
  v.owner = owner;
  v.name = name;
  v.descriptor = descriptor;
  v.base = std::make_shared<const DynamicValue>(base);
  v.type = VType::from_descriptor(descriptor);
  v.origin = serial_;
  return v;
}

DynamicValue DynamicContext::get_static_field(const std::string& name) const {
  const ClassModel& cls = *weaver_.view_.ctx.class_ctx->model;
  const FieldModel* field = cls.find_field(name);
  if (field == nullptr || !field->access.has(acc::STATIC))
    throw RegistrationError(cls.this_class + " has no static field " + name);
  DynamicValue v = get_static_field(cls.this_class, name, field->descriptor);
  v.handle = Handle::StaticFieldOfThisClass;
  return v;
}

DynamicValue DynamicContext::get_static_field(const std::string& owner, const std::string& name,
                                              const std::string& descriptor) const {
  DynamicValue v;
  v.handle = Handle::StaticFieldOf;
  v.owner = owner;
  v.name = name;
  v.descriptor = descriptor;
  v.type = VType::from_descriptor(descriptor);
  v.origin = serial_;
  return v;
}

DynamicValue DynamicContext::get_method_arg(int position) const {
  DynamicValue v;
  v.handle = Handle::MethodArg;
  v.index = position;
  v.origin = serial_;
  if (is_method_call_kind(jp_.kind)) {
    const auto& mc = call_of(jp_);
    const auto params = parse_method_descriptor(mc.descriptor).params;
    if (position < 1 || static_cast<std::size_t>(position) > params.size())
      throw UnavailableValue(mc.method_name + " has no argument " + std::to_string(position));
    v.descriptor = params[position - 1];
    v.type = VType::from_descriptor(v.descriptor);
    if (jp_.kind == Kind::BeforeMethodCall) {
      const auto& f = frame();
      v.type = f.stack[f.stack.size() - 1 - (params.size() - position)];
    }
    return v;
  }
  if (is_method_kind(jp_.kind)) {
    const auto& view = weaver_.view_;
    const auto params = parse_method_descriptor(view.ctx.descriptor).params;
    if (position < 1 || static_cast<std::size_t>(position) > params.size())
      throw UnavailableValue(view.ctx.name + " has no parameter " + std::to_string(position));
    int slot = view.method.is_static() ? 0 : 1;
    for (int p = 1; p < position; ++p) slot += descriptor_slots(params[p - 1]);
    const auto& f = frame();
    v.descriptor = params[position - 1];
    v.type = static_cast<std::size_t>(slot) < f.locals.size() ? f.locals[slot] : VType::top();
    require_usable(v.type, "parameter " + std::to_string(position));
    if (v.type.is_category2() != (descriptor_slots(v.descriptor) == 2) ||
        v.type.is_reference() != !is_primitive_descriptor(v.descriptor))
      throw UnavailableValue("parameter " + std::to_string(position) + " was overwritten");
    return v;
  }
  throw UnavailableValue(std::string("method arguments are not available at ") + joinpoint::to_string(jp_.kind));
}

DynamicValue DynamicContext::get_method_receiver() const {
  if (!is_method_call_kind(jp_.kind))
    throw UnavailableValue(std::string("no method receiver at ") + joinpoint::to_string(jp_.kind));
  const auto& mc = call_of(jp_);
  if (mc.is_static) throw UnavailableValue(mc.method_name + " is static and has no receiver");
  if (jp_.kind == Kind::BeforeMethodCall && is_constructor_call(mc))
    throw UnavailableValue("receiver of a constructor call is not initialized yet");
  DynamicValue v;
  v.handle = Handle::MethodReceiver;
  v.origin = serial_;
  v.type = VType::ref(mc.method_owner);
  if (jp_.kind == Kind::BeforeMethodCall) {
    const auto& f = frame();
    const std::size_t n = parse_method_descriptor(mc.descriptor).params.size();
    v.type = f.stack[f.stack.size() - 1 - n];
  }
  return v;
}

DynamicValue DynamicContext::get_method_result() const {
  if (jp_.kind != Kind::AfterMethodCall)
    throw UnavailableValue(std::string("no method result at ") + joinpoint::to_string(jp_.kind));
  const auto& mc = call_of(jp_);
  const std::string ret = parse_method_descriptor(mc.descriptor).ret;
  if (ret == "V") throw UnavailableValue(mc.method_name + mc.descriptor + " returns void");
  DynamicValue v;
  v.handle = Handle::MethodResult;
  v.descriptor = ret;
  v.origin = serial_;
  const auto& f = frame();
  v.type = f.stack.back();
  return v;
}

SyntheticLocal DynamicContext::add_local_variable(Primitive initial) {
  if (!is_method_kind(jp_.kind))
    throw RegistrationError(std::string("synthetic locals can only be added at method joinpoints, not ") +
                            joinpoint::to_string(jp_.kind));
  SyntheticLocal local = weaver_.new_synthetic(primitive_descriptor(initial));
  weaver_.add(jp_, action::AddLocal{local, initial});
  return local;
}

void DynamicContext::update_local_variable(const SyntheticLocal& local, Primitive value) {
  if (primitive_descriptor(value) != local.descriptor)
    throw CategoryMismatch("synthetic local " + std::to_string(local.id) + " has type " + local.descriptor +
                           ", not " + primitive_descriptor(value));
  weaver_.add(jp_, action::UpdateLocal{local, value});
}

DynamicValue DynamicContext::get_synthetic_local(const SyntheticLocal& local) const {
  DynamicValue v;
  v.handle = Handle::SyntheticLocal;
  v.index = local.id;
  v.descriptor = local.descriptor;
  v.type = primitive_type(local.descriptor);
  v.origin = serial_;
  return v;
}

void DynamicContext::print(const std::string& text, Stream s) { weaver_.add(jp_, action::Print{text, s, false}); }
void DynamicContext::print(const DynamicValue& v, Stream s) { weaver_.add(jp_, action::Print{v, s, false}); }
void DynamicContext::println(const std::string& text, Stream s) { weaver_.add(jp_, action::Print{text, s, true}); }
void DynamicContext::println(const DynamicValue& v, Stream s) { weaver_.add(jp_, action::Print{v, s, true}); }

void DynamicContext::print_hash(const DynamicValue& v, Stream s) {
  if (!v.type.is_reference()) throw RegistrationError("identity hash of a primitive value");
  weaver_.add(jp_, action::PrintHash{v, s});
}

void DynamicContext::invoke(const StaticInvocation& call) { weaver_.add(jp_, action::Invoke{call}); }
void DynamicContext::insert(std::vector<Insn> insns) { weaver_.add(jp_, action::InsertRaw{std::move(insns)}); }

Label DynamicContext::new_label() { return weaver_.view_.method.code->new_label(); }

std::uint16_t DynamicContext::new_local(int size) { return weaver_.allocate(size); }

// ---- weaver ----

MethodWeaver::MethodWeaver(joinpoint::MethodView& view, const analysis::ClassHierarchy& hierarchy)
    : view_(view), analyzer_(view.ctx.class_ctx->name, hierarchy) {
  base_locals_ = std::max(view.method.code->max_locals, analysis::scan_max_locals(view.method));
  next_slot_ = base_locals_;
}

std::uint32_t MethodWeaver::serial_of(const Joinpoint& jp) const {
  const auto& all = view_.joinpoints;
  if (all.empty() || &jp < all.data() || &jp >= all.data() + all.size())
    throw RegistrationError("joinpoint does not belong to method " + view_.ctx.name);
  return static_cast<std::uint32_t>(&jp - all.data()) + 1;
}

DynamicContext MethodWeaver::context(const Joinpoint& jp) { return DynamicContext(*this, jp, serial_of(jp)); }

const analysis::Frame& MethodWeaver::frame_at(const Joinpoint& jp) {
  const std::size_t i = jp.anchor.insn;
  const auto& before = view_.frames.at(i);
  if (!before) throw UnavailableValue("unreachable code has no frame");
  if (jp.anchor.side == Side::Before) return *before;
  auto it = after_frames_.find(i);
  if (it == after_frames_.end())
    it = after_frames_.emplace(i, analyzer_.execute(*view_.method.code, i, *before)).first;
  return it->second;
}

std::uint16_t MethodWeaver::allocate(int size) {
  if (next_slot_ + size > 0xFFFF) throw RegistrationError("too many locals in " + view_.ctx.name);
  const std::uint16_t slot = next_slot_;
  next_slot_ = static_cast<std::uint16_t>(next_slot_ + size);
  return slot;
}

SyntheticLocal MethodWeaver::new_synthetic(const std::string& descriptor) {
  SyntheticLocal l;
  l.id = static_cast<int>(synthetic_.size());
  l.descriptor = descriptor;
  l.slot = allocate(descriptor_slots(descriptor));
  synthetic_.push_back(l);
  return l;
}

namespace {

void check_origin(const DynamicValue& v, std::uint32_t serial) {
  if (v.origin != serial) throw RegistrationError("dynamic value used outside the joinpoint it was created for");
  if (v.base) check_origin(*v.base, serial);
}

void check_origins(const WeaveAction& a, std::uint32_t serial) {
  if (const auto* p = std::get_if<action::Print>(&a)) {
    if (const auto* v = std::get_if<DynamicValue>(&p->what)) check_origin(*v, serial);
  } else if (const auto* h = std::get_if<action::PrintHash>(&a)) {
    check_origin(h->value, serial);
  } else if (const auto* c = std::get_if<action::Invoke>(&a)) {
    for (const auto& param : c->call.params())
      if (const auto* v = std::get_if<DynamicValue>(&param)) check_origin(*v, serial);
  }
}

}  // namespace

void MethodWeaver::add(const Joinpoint& jp, WeaveAction a) {
  const std::uint32_t serial = serial_of(jp);
  check_origins(a, serial);
  pending_.push_back({&jp, serial, std::move(a)});
  ++action_count_;
}

namespace {

// Compiles one action at one joinpoint.
class Compiler {
 public:
  Compiler(const joinpoint::MethodView& view, const Joinpoint& jp, std::uint32_t serial, const analysis::Frame& frame,
           std::uint16_t scratch_base, const std::vector<std::uint16_t>* capture_slots, std::uint16_t& scratch_high)
      : view_(view),
        jp_(jp),
        serial_(serial),
        frame_(frame),
        scratch_base_(scratch_base),
        capture_(capture_slots),
        scratch_high_(scratch_high) {}

  std::vector<Insn> compile(const WeaveAction& a) {
    // Values below the top are reached by parking the covering prefix
    // in scratch locals; the advice then loads copies from there.
    std::visit([&](const auto& x) { scan(x); }, a);
    spill();
    std::visit([&](const auto& x) { emit(x); }, a);
    std::vector<Insn> result = std::move(prelude_);
    result.insert(result.end(), body_.begin(), body_.end());
    return result;
  }

 private:
  void need(const DynamicValue& v) {
    if (v.origin != serial_)
      throw RegistrationError("dynamic value used outside the joinpoint it was created for");
    if (v.base) need(*v.base);
    if (const auto d = stack_depth(v)) depth_ = std::max(depth_, *d + 1);
  }

  std::optional<int> stack_depth(const DynamicValue& v) const {
    switch (v.handle) {
      case Handle::StackValue: return v.index;
      case Handle::MethodResult: return 0;
      case Handle::MethodArg:
      case Handle::MethodReceiver: {
        if (jp_.kind != Kind::BeforeMethodCall) return std::nullopt;
        const auto n = static_cast<int>(parse_method_descriptor(call_of(jp_).descriptor).params.size());
        return v.handle == Handle::MethodReceiver ? n : n - v.index;
      }
      default: return std::nullopt;
    }
  }

  void scan(const action::Print& p) {
    if (const auto* v = std::get_if<DynamicValue>(&p.what)) need(*v);
  }
  void scan(const action::PrintHash& p) { need(p.value); }
  void scan(const action::Invoke& i) {
    for (const auto& p : i.call.params())
      if (const auto* v = std::get_if<DynamicValue>(&p)) need(*v);
  }
  void scan(const action::InsertRaw&) {}
  void scan(const action::AddLocal&) {}
  void scan(const action::UpdateLocal&) {}

  void spill() {
    const auto& stack = frame_.stack;
    std::uint16_t slot = scratch_base_;
    for (int d = 0; d < depth_; ++d) {
      const VType& t = stack[stack.size() - 1 - d];
      slots_.push_back(slot);
      prelude_.push_back(store_insn(t, slot));
      slot = static_cast<std::uint16_t>(slot + t.size());
    }
    for (int d = depth_ - 1; d >= 0; --d) prelude_.push_back(load_insn(stack[stack.size() - 1 - d], slots_[d]));
    scratch_high_ = std::max(scratch_high_, slot);
  }

  void load(const DynamicValue& v) {
    if (const auto d = stack_depth(v)) {
      body_.push_back(load_insn(frame_.stack[frame_.stack.size() - 1 - *d], slots_.at(*d)));
      return;
    }
    switch (v.handle) {
      case Handle::This:
        body_.push_back(v.type.kind() == VType::Kind::Null ? Insn::simple(op::ACONST_NULL) : Insn::var(op::ALOAD, 0));
        return;
      case Handle::LocalVariable: body_.push_back(load_insn(v.type, static_cast<std::uint16_t>(v.index))); return;
      case Handle::InstanceFieldOfThis:
        body_.push_back(Insn::var(op::ALOAD, 0));
        body_.push_back(Insn::field(op::GETFIELD, v.owner, v.name, v.descriptor));
        return;
      case Handle::InstanceFieldOf:
        load(*v.base);
        body_.push_back(Insn::field(op::GETFIELD, v.owner, v.name, v.descriptor));
        return;
      case Handle::StaticFieldOfThisClass:
      case Handle::StaticFieldOf: body_.push_back(Insn::field(op::GETSTATIC, v.owner, v.name, v.descriptor)); return;
      case Handle::MethodArg:
      case Handle::MethodReceiver: {
        if (is_method_kind(jp_.kind)) {
          const auto params = parse_method_descriptor(view_.ctx.descriptor).params;
          int slot = view_.method.is_static() ? 0 : 1;
          for (int p = 1; p < v.index; ++p) slot += descriptor_slots(params[p - 1]);
          body_.push_back(load_insn(v.type, static_cast<std::uint16_t>(slot)));
          return;
        }
        // After the call: the operands were captured right before it.
        const auto& mc = call_of(jp_);
        const std::size_t at = v.handle == Handle::MethodReceiver ? 0 : v.index - (mc.is_static ? 1 : 0);
        const auto types = call_operand_types(mc);
        body_.push_back(load_insn(types.at(at), capture_->at(at)));
        return;
      }
      case Handle::SyntheticLocal: {
        const auto& local = synthetic_at(v.index);
        body_.push_back(load_insn(primitive_type(local.descriptor), local.slot));
        return;
      }
      default: throw UnavailableValue("value cannot be loaded here");
    }
  }

  const SyntheticLocal& synthetic_at(int id) const;

  void emit_stream(Stream s) {
    body_.push_back(Insn::field(op::GETSTATIC, "java/lang/System", s == Stream::Err ? "err" : "out",
                                "Ljava/io/PrintStream;"));
  }

  static std::string print_descriptor(const DynamicValue& v) {
    if (v.descriptor == "Z" || v.descriptor == "C") return "(" + v.descriptor + ")V";
    switch (v.type.kind()) {
      case VType::Kind::Int: return "(I)V";
      case VType::Kind::Long: return "(J)V";
      case VType::Kind::Float: return "(F)V";
      case VType::Kind::Double: return "(D)V";
      case VType::Kind::Ref:
        if (v.type.class_name() == "java/lang/String") return "(Ljava/lang/String;)V";
        [[fallthrough]];
      default: return "(Ljava/lang/Object;)V";
    }
  }

  void emit(const action::Print& p) {
    emit_stream(p.stream);
    std::string desc = "(Ljava/lang/String;)V";
    if (const auto* text = std::get_if<std::string>(&p.what)) {
      body_.push_back(Insn::ldc(constant::String{*text}));
    } else {
      const auto& v = std::get<DynamicValue>(p.what);
      load(v);
      desc = print_descriptor(v);
    }
    body_.push_back(Insn::method(op::INVOKEVIRTUAL, "java/io/PrintStream", p.newline ? "println" : "print", desc));
  }

  void emit(const action::PrintHash& p) {
    emit_stream(p.stream);
    load(p.value);
    body_.push_back(Insn::method(op::INVOKESTATIC, "java/lang/System", "identityHashCode", "(Ljava/lang/Object;)I"));
    body_.push_back(Insn::method(op::INVOKEVIRTUAL, "java/io/PrintStream", "println", "(I)V"));
  }

  void emit(const action::Invoke& i) {
    for (const auto& p : i.call.params()) {
      switch (p.index()) {
        case 0: load(std::get<DynamicValue>(p)); break;
        case 1: body_.push_back(push_int(std::get<std::int32_t>(p))); break;
        case 2: append(push_constant(std::get<std::int64_t>(p))); break;
        case 3: append(push_constant(std::get<float>(p))); break;
        case 4: append(push_constant(std::get<double>(p))); break;
        case 5: append(push_constant(std::get<bool>(p))); break;
        default: body_.push_back(Insn::ldc(constant::String{std::get<std::string>(p)})); break;
      }
    }
    body_.push_back(Insn::method(op::INVOKESTATIC, i.call.owner(), i.call.method(), i.call.descriptor()));
  }

  void emit(const action::InsertRaw& r) { append(r.insns); }

  void emit(const action::AddLocal&) {}  // stored in the prologue

  void emit(const action::UpdateLocal& u) {
    append(push_constant(u.value));
    body_.push_back(store_insn(primitive_type(u.local.descriptor), u.local.slot));
  }

  void append(const std::vector<Insn>& v) { body_.insert(body_.end(), v.begin(), v.end()); }

  const joinpoint::MethodView& view_;
  const Joinpoint& jp_;
  std::uint32_t serial_;
  const analysis::Frame& frame_;
  std::uint16_t scratch_base_;
  const std::vector<std::uint16_t>* capture_;
  std::uint16_t& scratch_high_;

  int depth_ = 0;
  std::vector<std::uint16_t> slots_;
  std::vector<Insn> prelude_;
  std::vector<Insn> body_;

 public:
  const std::vector<SyntheticLocal>* synthetic = nullptr;
};

const SyntheticLocal& Compiler::synthetic_at(int id) const {
  if (synthetic == nullptr || id < 0 || static_cast<std::size_t>(id) >= synthetic->size())
    throw RegistrationError("unknown synthetic local " + std::to_string(id));
  return (*synthetic)[id];
}

bool needs_capture(const WeaveAction& a) {
  auto uses = [](const DynamicValue& v) {
    for (const DynamicValue* p = &v; p != nullptr; p = p->base.get())
      if (p->handle == Handle::MethodArg || p->handle == Handle::MethodReceiver) return true;
    return false;
  };
  if (const auto* p = std::get_if<action::Print>(&a))
    if (const auto* v = std::get_if<DynamicValue>(&p->what)) return uses(*v);
  if (const auto* p = std::get_if<action::PrintHash>(&a)) return uses(p->value);
  if (const auto* p = std::get_if<action::Invoke>(&a))
    for (const auto& q : p->call.params())
      if (const auto* v = std::get_if<DynamicValue>(&q); v != nullptr && uses(*v)) return true;
  return false;
}

}  // namespace

void MethodWeaver::apply() {
  if (pending_.empty()) return;
  CodeBody& code = *view_.method.code;
  const auto& insns = view_.cfg.insns;

  // Order: anchor, kind rank, registration.
  std::vector<const Pending*> order;
  for (const auto& p : pending_) order.push_back(&p);
  std::stable_sort(order.begin(), order.end(), [](const Pending* a, const Pending* b) {
    if (a->jp->anchor.key() != b->jp->anchor.key()) return a->jp->anchor.key() < b->jp->anchor.key();
    return joinpoint::rank(a->jp->kind) < joinpoint::rank(b->jp->kind);
  });

  // Operands of calls whose after-advice reads arguments or the receiver.
  std::map<std::size_t, std::vector<std::uint16_t>> captures;
  std::uint16_t capture_size = 0;
  for (const Pending* p : order) {
    if (p->jp->kind != Kind::AfterMethodCall || !needs_capture(p->action)) continue;
    const std::size_t k = p->jp->anchor.insn;
    if (captures.count(k)) continue;
    std::vector<std::uint16_t> slots;
    std::uint16_t offset = 0;
    for (const auto& t : call_operand_types(call_of(*p->jp))) {
      slots.push_back(offset);
      offset = static_cast<std::uint16_t>(offset + t.size());
    }
    capture_size = std::max(capture_size, offset);
    captures.emplace(k, std::move(slots));
  }
  const std::uint16_t capture_base = next_slot_;
  for (auto& [k, slots] : captures)
    for (auto& s : slots) s = static_cast<std::uint16_t>(s + capture_base);
  const auto scratch_base = static_cast<std::uint16_t>(capture_base + capture_size);
  std::uint16_t scratch_high = scratch_base;

  std::map<std::size_t, std::vector<Insn>> before, after;
  std::vector<Insn> prologue;
  for (const Pending* p : order) {
    if (const auto* add = std::get_if<action::AddLocal>(&p->action)) {
      const auto code_for = push_constant(add->initial);
      prologue.insert(prologue.end(), code_for.begin(), code_for.end());
      prologue.push_back(store_insn(primitive_type(add->local.descriptor), add->local.slot));
      continue;
    }
    const Joinpoint& jp = *p->jp;
    const auto cap = captures.find(jp.anchor.insn);
    Compiler c(view_, jp, p->serial, frame_at(jp), scratch_base,
               (jp.kind == Kind::AfterMethodCall && cap != captures.end()) ? &cap->second : nullptr, scratch_high);
    c.synthetic = &synthetic_;
    auto out = c.compile(p->action);
    auto& dest = jp.anchor.side == Side::Before ? before[jp.anchor.insn] : after[jp.anchor.insn];
    dest.insert(dest.end(), out.begin(), out.end());
  }

  const std::size_t entry = view_.ctx.entry_block->first_real;
  std::vector<Insn> woven;
  woven.reserve(insns.size() * 2);
  for (std::size_t i = 0; i < insns.size(); ++i) {
    if (!insns[i].is_real()) {
      woven.push_back(insns[i]);
      continue;
    }
    if (i == entry) woven.insert(woven.end(), prologue.begin(), prologue.end());
    if (auto it = before.find(i); it != before.end()) woven.insert(woven.end(), it->second.begin(), it->second.end());
    if (auto it = captures.find(i); it != captures.end()) {
      const auto& f = *view_.frames[i];
      const auto types = call_operand_types(*view_.call_ctx(i));
      const auto& slots = it->second;
      // Operand j sits at depth (count - 1 - j); use the frame's own types.
      const std::size_t count = types.size();
      for (std::size_t d = 0; d < count; ++d) {
        const std::size_t j = count - 1 - d;
        woven.push_back(store_insn(f.stack[f.stack.size() - 1 - d], slots[j]));
      }
      for (std::size_t j = 0; j < count; ++j) woven.push_back(load_insn(f.stack[f.stack.size() - count + j], slots[j]));
    }
    woven.push_back(insns[i]);
    if (auto it = after.find(i); it != after.end()) woven.insert(woven.end(), it->second.begin(), it->second.end());
  }
  renumber(woven);
  code.insns = std::move(woven);
  code.max_locals = std::max<std::uint16_t>(code.max_locals, scratch_high);
  pending_.clear();
}

// ---- finalize ----

namespace {

// Upper bound of the encoded code length.
std::size_t code_size_bound(const CodeBody& code) {
  std::size_t n = 0;
  for (const auto& i : code.insns) {
    if (!i.is_real()) continue;
    if (const auto* t = i.get_if<operand::TableSwitch>()) n += 16 + 4 * t->targets.size();
    else if (const auto* l = i.get_if<operand::LookupSwitch>()) n += 12 + 8 * l->pairs.size();
    else n += 8;
  }
  return n;
}

bool fits(const CodeBody& code, const ConstantPool& pool) {
  if (code_size_bound(code) <= 32767) return true;
  CodeBody probe = code;
  probe.stack_map.reset();
  ConstantPool scratch = pool;
  try {
    encode_code(probe, scratch);
    return true;
  } catch (const EncodingOverflow&) {
    return false;
  }
}

// IFxx L  ->  IF!xx skip; GOTO L; skip:
void widen_conditional_jumps(CodeBody& code) {
  std::vector<Insn> out;
  for (auto& i : code.insns) {
    if (!is_conditional_jump(i.opcode)) {
      out.push_back(std::move(i));
      continue;
    }
    const Label target = i.as<operand::Jump>().target;
    const Label skip = code.new_label();
    out.push_back(Insn::jump(negate_jump(i.opcode), skip));
    out.push_back(Insn::jump(op::GOTO, target));
    out.push_back(Insn::label(skip));
  }
  renumber(out);
  code.insns = std::move(out);
}

bool has_offsets(const std::string& attribute) {
  return attribute == "RuntimeVisibleTypeAnnotations" || attribute == "RuntimeInvisibleTypeAnnotations";
}

// Type annotations on code carry bytecode offsets that weaving invalidates.
void drop_offset_attributes(CodeBody& code) {
  std::vector<RawAttribute> kept;
  std::vector<CodeBody::AttributeSlot> order;
  for (const auto& slot : code.attribute_order) {
    if (slot.part != CodeBody::Part::Raw) {
      order.push_back(slot);
      continue;
    }
    const auto& raw = code.raw_attributes.at(slot.raw_index);
    if (has_offsets(raw.name)) continue;
    order.push_back({CodeBody::Part::Raw, kept.size(), slot.name_index});
    kept.push_back(raw);
  }
  code.raw_attributes = std::move(kept);
  code.attribute_order = std::move(order);
}

}  // namespace

void finalize(MethodModel& method, const ClassModel& cls, const analysis::ClassHierarchy& hierarchy,
              const FinalizeOptions& options) {
  if (!method.code) return;
  const std::string who = dotted(cls.this_class) + "." + method.name + method.descriptor;
  CodeBody& code = *method.code;
  const analysis::Analyzer analyzer(cls.this_class, hierarchy, options.strict_frames);
  auto frames_of = [&] {
    try {
      return analyzer.basic_frames(method);
    } catch (const TypeConflict& e) {
      throw WeaveError(who, e.what());
    } catch (const MalformedCode& e) {
      throw WeaveError(who, e.what());
    } catch (const ResolutionFailure& e) {
      throw WeaveError(who, e.what());
    }
  };

  analysis::ensure_new_labels(code);
  auto frames = frames_of();
  if (analysis::remove_unreachable(code, frames) > 0) frames = frames_of();
  drop_offset_attributes(code);

  if (!fits(code, cls.constant_pool)) {
    widen_conditional_jumps(code);
    frames = frames_of();
    if (!fits(code, cls.constant_pool)) throw WeaveError(who, "code exceeds 65535 bytes");
  }

  const auto max = analyzer.recompute_max(method, frames);
  code.max_stack = max.max_stack;
  code.max_locals = std::max(code.max_locals, max.max_locals);
  if (options.strip_frames || cls.major_version < 50) {
    code.stack_map.reset();
  } else {
    auto map = analyzer.compute_stack_map(method, frames);
    if (map.empty() && !code.stack_map) return;
    code.stack_map = std::move(map);
  }
}

}  // namespace cfweave::weaver
