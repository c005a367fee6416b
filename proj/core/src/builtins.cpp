#include "cfweave/transformers/builtins.hpp"

#include "cfweave/analysis/assembler.hpp"
#include "cfweave/classfile/descriptor.hpp"

namespace cfweave::transformers {

using namespace classfile;
using analysis::CodeBuilder;

// ---- block tracer ----

KindSet BasicBlockTracer::kinds() const { return transformers::kinds({Kind::OnBasicBlockEnter, Kind::OnBasicBlockExit}); }

std::string BasicBlockTracer::block_name(const BasicBlockCtx& bb) {
  return dotted(bb.method->class_ctx->name) + "." + bb.id;
}

void BasicBlockTracer::on_basic_block_enter(const BasicBlockCtx& bb, DynamicContext& dc) {
  dc.println("Entered block:" + block_name(bb));
}

void BasicBlockTracer::on_basic_block_exit(const BasicBlockCtx& bb, DynamicContext& dc) {
  dc.println("Exited block:" + block_name(bb));
}

// ---- iterator monitor ----

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

KindSet IteratorMonitor::kinds() const { return transformers::kinds({Kind::BeforeMethodCall, Kind::AfterMethodCall}); }

void IteratorMonitor::after_method_call(const MethodCallCtx& mc, DynamicContext& dc) {
  if (mc.method_name != "iterator" || !ends_with(mc.method_owner, "List") || mc.is_static) return;
  weaver::DynamicValue calling_class;
  try {
    calling_class = dc.get_this();
  } catch (const UnavailableValue&) {
    return;  // inside a constructor before super(): nothing to pass
  }
  weaver::StaticInvocation sti(kMonitorClass, "iteratorCreation");
  sti.add_param(calling_class);
  sti.add_param(dc.get_method_target());
  sti.add_param(dc.get_method_result());
  dc.invoke(sti);
}

void IteratorMonitor::before_method_call(const MethodCallCtx& mc, DynamicContext& dc) {
  if (mc.is_static || !ends_with(mc.method_owner, "Iterator")) return;
  const char* event = nullptr;
  if (mc.method_name == "hasNext" && mc.descriptor == "()Z") event = "hasNextCall";
  if (mc.method_name == "next" && mc.descriptor == "()Ljava/lang/Object;") event = "nextCall";
  if (event == nullptr) return;
  weaver::StaticInvocation sti(kMonitorClass, event);
  sti.add_param(dc.get_method_receiver());
  dc.invoke(sti);
}

std::vector<std::pair<std::string, Bytes>> IteratorMonitor::runtime_classes() const {
  return {{kMonitorClass, iterator_monitor_class()}};
}

// ---- test inversion detector ----

KindSet TestInversionDetector::kinds() const {
  return transformers::kinds({Kind::BeforeInstruction, Kind::OnTrueBranchEnter, Kind::OnFalseBranchEnter});
}

void TestInversionDetector::begin_method(const MethodCtx&) { copies_.clear(); }

const std::vector<std::uint16_t>& TestInversionDetector::copies_of(const InstructionCtx& jump, DynamicContext& dc) {
  auto it = copies_.find(&jump);
  if (it == copies_.end()) {
    std::vector<std::uint16_t> slots;
    for (int i = 0; i < jump.stack_operands_if_cond_jump; ++i) slots.push_back(dc.new_local(1));
    it = copies_.emplace(&jump, std::move(slots)).first;
  }
  return it->second;
}

void TestInversionDetector::before_instruction(const InstructionCtx& ic, DynamicContext& dc) {
  if (!ic.is_conditional_jump || ic.synthetic) return;
  const auto& slots = copies_of(ic, dc);
  const auto& stack = ic.basic_value_frame->stack;
  std::vector<Insn> code;
  if (slots.size() == 1) {
    code.push_back(Insn::simple(op::DUP));
    code.push_back(weaver::store_insn(stack.back(), slots[0]));
  } else {
    code.push_back(Insn::simple(op::DUP2));
    code.push_back(weaver::store_insn(stack[stack.size() - 1], slots[1]));
    code.push_back(weaver::store_insn(stack[stack.size() - 2], slots[0]));
  }
  dc.insert(std::move(code));
}

void TestInversionDetector::check(const BasicBlockCtx&, DynamicContext& dc, bool taken) {
  const InstructionCtx* jump = dc.joinpoint().branch;
  if (jump == nullptr || jump->synthetic) return;
  const auto& slots = copies_of(*jump, dc);
  const auto& stack = jump->basic_value_frame->stack;
  const Label ok = dc.new_label();
  std::vector<Insn> code;
  code.push_back(Insn::method(op::INVOKESTATIC, kReporterClass, "event", "()V"));
  for (std::size_t i = 0; i < slots.size(); ++i)
    code.push_back(weaver::load_insn(stack[stack.size() - slots.size() + i], slots[i]));
  code.push_back(Insn::jump(taken ? jump->opcode : negate_jump(jump->opcode), ok));
  code.push_back(Insn::ldc(constant::String{dotted(jump->class_name) + "." + jump->basic_block->id}));
  code.push_back(Insn::method(op::INVOKESTATIC, kReporterClass, "inversion", "(Ljava/lang/String;)V"));
  code.push_back(Insn::label(ok));
  dc.insert(std::move(code));
}

void TestInversionDetector::on_true_branch_enter(const BasicBlockCtx& bb, DynamicContext& dc) { check(bb, dc, true); }
void TestInversionDetector::on_false_branch_enter(const BasicBlockCtx& bb, DynamicContext& dc) { check(bb, dc, false); }

std::vector<std::pair<std::string, Bytes>> TestInversionDetector::runtime_classes() const {
  return {{kReporterClass, inversion_reporter_class()}};
}

// ---- fault injection ----

void FaultInjector::begin_method(const MethodCtx& m) {
  TestInversionDetector::begin_method(m);
  active_ = m.name == method_;
  seen_ = 0;
}

void FaultInjector::before_instruction(const InstructionCtx& ic, DynamicContext& dc) {
  TestInversionDetector::before_instruction(ic, dc);
  if (!active_ || !ic.is_conditional_jump || ic.synthetic) return;
  if (seen_++ != ordinal_) return;
  dc.insert(flip_outcome(ic, dc));
  ++injected_;
}

std::vector<Insn> flip_outcome(const InstructionCtx& jump, DynamicContext& dc) {
  // Test the real operands, then push operands that give the opposite
  // answer: `when_true` makes the jump go, `when_false` makes it fall through.
  const Opcode o = jump.opcode;
  auto null_ = [] { return Insn::simple(op::ACONST_NULL); };
  auto some = [] { return Insn::ldc(constant::String{""}); };
  std::vector<Insn> when_true, when_false;
  switch (o) {
    case op::IFEQ: when_true = {push_int(0)}; when_false = {push_int(1)}; break;
    case op::IFNE: when_true = {push_int(1)}; when_false = {push_int(0)}; break;
    case op::IFLT: when_true = {push_int(-1)}; when_false = {push_int(0)}; break;
    case op::IFGE: when_true = {push_int(0)}; when_false = {push_int(-1)}; break;
    case op::IFGT: when_true = {push_int(1)}; when_false = {push_int(0)}; break;
    case op::IFLE: when_true = {push_int(0)}; when_false = {push_int(1)}; break;
    case op::IF_ICMPEQ: when_true = {push_int(0), push_int(0)}; when_false = {push_int(0), push_int(1)}; break;
    case op::IF_ICMPNE: when_true = {push_int(0), push_int(1)}; when_false = {push_int(0), push_int(0)}; break;
    case op::IF_ICMPLT: when_true = {push_int(0), push_int(1)}; when_false = {push_int(0), push_int(0)}; break;
    case op::IF_ICMPGE: when_true = {push_int(0), push_int(0)}; when_false = {push_int(0), push_int(1)}; break;
    case op::IF_ICMPGT: when_true = {push_int(1), push_int(0)}; when_false = {push_int(0), push_int(0)}; break;
    case op::IF_ICMPLE: when_true = {push_int(0), push_int(0)}; when_false = {push_int(1), push_int(0)}; break;
    case op::IF_ACMPEQ: when_true = {null_(), null_()}; when_false = {null_(), some()}; break;
    case op::IF_ACMPNE: when_true = {null_(), some()}; when_false = {null_(), null_()}; break;
    case op::IFNULL: when_true = {null_()}; when_false = {some()}; break;
    case op::IFNONNULL: when_true = {some()}; when_false = {null_()}; break;
    default: return {};
  }
  const Label held = dc.new_label(), done = dc.new_label();
  std::vector<Insn> code;
  code.push_back(Insn::jump(o, held));
  code.insert(code.end(), when_true.begin(), when_true.end());
  code.push_back(Insn::jump(op::GOTO, done));
  code.push_back(Insn::label(held));
  code.insert(code.end(), when_false.begin(), when_false.end());
  code.push_back(Insn::label(done));
  return code;
}

// ---- registry ----

std::vector<std::string> builtin_names() { return {"trace-blocks", "monitor-iterators", "detect-test-inversions"}; }

std::unique_ptr<Transformer> make_builtin(const std::string& name) {
  if (name == "trace-blocks") return std::make_unique<BasicBlockTracer>();
  if (name == "monitor-iterators") return std::make_unique<IteratorMonitor>();
  if (name == "detect-test-inversions") return std::make_unique<TestInversionDetector>();
  return nullptr;
}

// ---- runtime classes ----

namespace {

void add_static_field(ClassModel& cls, const std::string& name, const std::string& desc) {
  FieldModel f;
  f.access.bits = acc::PRIVATE | acc::STATIC;
  f.name = name;
  f.descriptor = desc;
  cls.fields.push_back(std::move(f));
}

void increment(CodeBuilder& b, const std::string& owner, const std::string& field) {
  b.field(op::GETSTATIC, owner, field, "I").iconst(1).op(op::IADD).field(op::PUTSTATIC, owner, field, "I");
}

void err(CodeBuilder& b) { b.field(op::GETSTATIC, "java/lang/System", "err", "Ljava/io/PrintStream;"); }

void print(CodeBuilder& b, const char* method, const char* desc) {
  b.invoke(op::INVOKEVIRTUAL, "java/io/PrintStream", method, desc);
}

// Static initializer registering an instance of `cls` (a Thread) as a
// shutdown hook, so run() prints the totals when the program ends.
void add_shutdown_hook(ClassModel& cls) {
  analysis::add_default_constructor(cls);
  CodeBuilder b;
  b.invoke(op::INVOKESTATIC, "java/lang/Runtime", "getRuntime", "()Ljava/lang/Runtime;");
  b.type(op::NEW, cls.this_class).op(op::DUP).invoke(op::INVOKESPECIAL, cls.this_class, "<init>", "()V");
  b.invoke(op::INVOKEVIRTUAL, "java/lang/Runtime", "addShutdownHook", "(Ljava/lang/Thread;)V").op(op::RETURN);
  analysis::add_method(cls, acc::STATIC, "<clinit>", "()V", b.take());
}

}  // namespace

Bytes iterator_monitor_class() {
  const std::string self = IteratorMonitor::kMonitorClass;
  auto cls = analysis::make_class(self, "java/lang/Thread");
  for (const char* f : {"creations", "hasNexts", "nexts", "violations"}) add_static_field(cls, f, "I");
  add_static_field(cls, "armed", "Ljava/lang/Object;");
  add_shutdown_hook(cls);
  {
    CodeBuilder b;
    increment(b, self, "creations");
    b.op(op::RETURN);
    analysis::add_method(cls, acc::PUBLIC | acc::STATIC, "iteratorCreation",
                         "(Ljava/lang/Object;Ljava/lang/Object;Ljava/lang/Object;)V", b.take());
  }
  {
    CodeBuilder b;
    increment(b, self, "hasNexts");
    b.var(op::ALOAD, 0).field(op::PUTSTATIC, self, "armed", "Ljava/lang/Object;").op(op::RETURN);
    analysis::add_method(cls, acc::PUBLIC | acc::STATIC, "hasNextCall", "(Ljava/lang/Object;)V", b.take());
  }
  {
    // next() is only legal right after hasNext() on the same iterator.
    CodeBuilder b;
    const Label ok = b.label();
    increment(b, self, "nexts");
    b.field(op::GETSTATIC, self, "armed", "Ljava/lang/Object;").var(op::ALOAD, 0).jump(op::IF_ACMPEQ, ok);
    increment(b, self, "violations");
    err(b);
    b.str("IteratorMonitor: HasNext violation");
    print(b, "println", "(Ljava/lang/String;)V");
    b.mark(ok).op(op::ACONST_NULL).field(op::PUTSTATIC, self, "armed", "Ljava/lang/Object;").op(op::RETURN);
    analysis::add_method(cls, acc::PUBLIC | acc::STATIC, "nextCall", "(Ljava/lang/Object;)V", b.take());
  }
  {
    CodeBuilder b;
    const std::pair<const char*, const char*> parts[] = {{"IteratorMonitor creations=", "creations"},
                                                         {" hasNext=", "hasNexts"},
                                                         {" next=", "nexts"},
                                                         {" violations=", "violations"}};
    for (const auto& [text, field] : parts) {
      err(b);
      b.str(text);
      print(b, "print", "(Ljava/lang/String;)V");
      err(b);
      b.field(op::GETSTATIC, self, field, "I");
      print(b, "print", "(I)V");
    }
    err(b);
    print(b, "println", "()V");
    b.op(op::RETURN);
    analysis::add_method(cls, acc::PUBLIC, "run", "()V", b.take());
  }
  return emit_class(cls);
}

Bytes inversion_reporter_class() {
  const std::string self = TestInversionDetector::kReporterClass;
  auto cls = analysis::make_class(self, "java/lang/Thread");
  add_static_field(cls, "events", "J");
  add_static_field(cls, "inversions", "I");
  add_shutdown_hook(cls);
  {
    CodeBuilder b;
    b.field(op::GETSTATIC, self, "events", "J").op(op::LCONST_1).op(op::LADD).field(op::PUTSTATIC, self, "events", "J");
    b.op(op::RETURN);
    analysis::add_method(cls, acc::PUBLIC | acc::STATIC, "event", "()V", b.take());
  }
  {
    CodeBuilder b;
    increment(b, self, "inversions");
    err(b);
    b.str("InversionReporter: test inversion at ");
    print(b, "print", "(Ljava/lang/String;)V");
    err(b);
    b.var(op::ALOAD, 0);
    print(b, "println", "(Ljava/lang/String;)V");
    b.op(op::RETURN);
    analysis::add_method(cls, acc::PUBLIC | acc::STATIC, "inversion", "(Ljava/lang/String;)V", b.take());
  }
  {
    CodeBuilder b;
    err(b);
    b.str("InversionReporter events=");
    print(b, "print", "(Ljava/lang/String;)V");
    err(b);
    b.field(op::GETSTATIC, self, "events", "J");
    print(b, "print", "(J)V");
    err(b);
    b.str(" inversions=");
    print(b, "print", "(Ljava/lang/String;)V");
    err(b);
    b.field(op::GETSTATIC, self, "inversions", "I");
    print(b, "println", "(I)V");
    b.op(op::RETURN);
    analysis::add_method(cls, acc::PUBLIC, "run", "()V", b.take());
  }
  return emit_class(cls);
}

}  // namespace cfweave::transformers
