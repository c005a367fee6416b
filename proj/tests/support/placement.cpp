#include "placement.hpp"

#include <sstream>

#include "fixtures.hpp"
#include "jvm.hpp"

namespace testsupport {

namespace tf = cfweave::transformers;
using cfweave::joinpoint::Kind;

namespace {

std::string insn_tag(const Insn& insn) {
  if (insn.opcode == op::INVOKESTATIC) {
    const auto& ref = insn.as<operand::Method>().ref;
    if (ref.owner == "fixtures/Probe" && ref.name.starts_with("hit")) return ref.name;
  }
  return std::string(mnemonic(insn.opcode));
}

std::string block_tag(const tf::BasicBlockCtx& bb) {
  if (bb.synthetic) return "split";
  return insn_tag(bb.method->cfg->insns[bb.first_real]);
}

std::string lines(std::initializer_list<const char*> items) {
  std::string out;
  for (const char* s : items) out += std::string(s) + "\n";
  return out;
}

}  // namespace

void ProbeTracer::on_method_enter(const tf::MethodCtx&, tf::DynamicContext& dc) { dc.println("ME"); }
void ProbeTracer::on_method_exit(const tf::MethodCtx&, tf::DynamicContext& dc) { dc.println("MX"); }
void ProbeTracer::on_basic_block_enter(const tf::BasicBlockCtx& bb, tf::DynamicContext& dc) {
  dc.println("BE:" + block_tag(bb));
}
void ProbeTracer::on_basic_block_exit(const tf::BasicBlockCtx& bb, tf::DynamicContext& dc) {
  dc.println("BX:" + block_tag(bb));
}
void ProbeTracer::on_true_branch_enter(const tf::BasicBlockCtx& bb, tf::DynamicContext& dc) {
  dc.println("T:" + block_tag(bb));
}
void ProbeTracer::on_false_branch_enter(const tf::BasicBlockCtx& bb, tf::DynamicContext& dc) {
  dc.println("F:" + block_tag(bb));
}
void ProbeTracer::before_instruction(const tf::InstructionCtx& ic, tf::DynamicContext& dc) {
  dc.println("BI:" + insn_tag(*ic.insn));
}
void ProbeTracer::after_instruction(const tf::InstructionCtx& ic, tf::DynamicContext& dc) {
  dc.println("AI:" + insn_tag(*ic.insn));
}
void ProbeTracer::before_method_call(const tf::MethodCallCtx& mc, tf::DynamicContext& dc) {
  dc.println("BC:" + insn_tag(*mc.ins->insn));
}
void ProbeTracer::after_method_call(const tf::MethodCallCtx& mc, tf::DynamicContext& dc) {
  dc.println("AC:" + insn_tag(*mc.ins->insn));
}

// Block layout of the scenarios (tags in brackets):
//   branch  A[iload ifeq]  B[hit1 hit2]  C[hit3 return]; A->C is critical
//   jumper  A[iload ifle]  B[hit1 goto]  C[hit2]  D[hit3 return]
//   thrower [hit1 new dup invokespecial athrow]
//   empty   [return]
std::vector<PlacementCase> placement_cases() {
  std::vector<PlacementCase> cases;

  cases.push_back({"method enter before the first instruction, exit before return and athrow",
                   tf::kinds({Kind::OnMethodEnter, Kind::OnMethodExit}),
                   lines({"-- branch 1", "ME", "hit1", "hit2", "hit3", "MX",  //
                          "-- branch 0", "ME", "hit3", "MX",                  //
                          "-- jumper 1", "ME", "hit1", "hit3", "MX",          //
                          "-- jumper 0", "ME", "hit2", "hit3", "MX",          //
                          "-- empty", "ME", "MX",                             //
                          "-- thrower", "ME", "hit1", "MX", "hit4"})});

  // Exit goes after a falling-through block and before a jump, return or throw.
  cases.push_back({"block enter at the start, exit after fall-through and before jump/return/throw",
                   tf::kinds({Kind::OnBasicBlockEnter, Kind::OnBasicBlockExit}),
                   lines({"-- branch 1", "BE:iload", "BX:iload", "BE:hit1", "hit1", "hit2", "BX:hit1", "BE:hit3",
                          "hit3", "BX:hit3",  //
                          "-- branch 0", "BE:iload", "BX:iload", "BE:hit3", "hit3", "BX:hit3",
                          "-- jumper 1", "BE:iload", "BX:iload", "BE:hit1", "hit1", "BX:hit1", "BE:hit3", "hit3",
                          "BX:hit3",  //
                          "-- jumper 0", "BE:iload", "BX:iload", "BE:hit2", "hit2", "BX:hit2", "BE:hit3", "hit3",
                          "BX:hit3",                             //
                          "-- empty", "BE:return", "BX:return",  //
                          "-- thrower", "BE:hit1", "hit1", "BX:hit1", "hit4"})});

  // Before-instruction of a block's first instruction runs after it;
  // after-instruction of a block's last instruction runs before it. A lone
  // instruction (jumper C) gets both, so AI precedes BI.
  cases.push_back({"before/after instruction with the block-entry and block-exit exceptions",
                   tf::kinds({Kind::BeforeInstruction, Kind::AfterInstruction}),
                   lines({"-- branch 1", "BI:iload", "AI:iload", "BI:ifeq", "AI:ifeq", "hit1", "BI:hit1", "AI:hit1",
                          "BI:hit2", "AI:hit2", "hit2", "hit3", "BI:hit3", "AI:hit3", "BI:return", "AI:return",
                          "-- branch 0", "BI:iload", "AI:iload", "BI:ifeq", "AI:ifeq", "hit3", "BI:hit3", "AI:hit3",
                          "BI:return", "AI:return",  //
                          "-- jumper 1", "BI:iload", "AI:iload", "BI:ifle", "AI:ifle", "hit1", "BI:hit1", "AI:hit1",
                          "BI:goto", "AI:goto", "hit3", "BI:hit3", "AI:hit3", "BI:return", "AI:return",
                          "-- jumper 0", "BI:iload", "AI:iload", "BI:ifle", "AI:ifle", "AI:hit2", "hit2", "BI:hit2",
                          "hit3", "BI:hit3", "AI:hit3", "BI:return", "AI:return",  //
                          "-- empty", "BI:return", "AI:return",                    //
                          "-- thrower", "hit1", "BI:hit1", "AI:hit1", "BI:new", "AI:new", "BI:dup", "AI:dup",
                          "BI:invokespecial", "AI:invokespecial", "BI:athrow", "AI:athrow", "hit4"})});

  cases.push_back({"before/after method call surround the call",
                   tf::kinds({Kind::BeforeMethodCall, Kind::AfterMethodCall}),
                   lines({"-- branch 1", "BC:hit1", "hit1", "AC:hit1", "BC:hit2", "hit2", "AC:hit2", "BC:hit3", "hit3",
                          "AC:hit3",                                          //
                          "-- branch 0", "BC:hit3", "hit3", "AC:hit3",        //
                          "-- jumper 1", "BC:hit1", "hit1", "AC:hit1", "BC:hit3", "hit3", "AC:hit3",
                          "-- jumper 0", "BC:hit2", "hit2", "AC:hit2", "BC:hit3", "hit3", "AC:hit3",
                          "-- empty",  //
                          "-- thrower", "BC:hit1", "hit1", "AC:hit1", "BC:invokespecial", "AC:invokespecial",
                          "hit4"})});

  // The taken edge of branch is critical and gets a split block.
  cases.push_back({"true/false branch enter on the taken and fall-through successors",
                   tf::kinds({Kind::OnTrueBranchEnter, Kind::OnFalseBranchEnter}),
                   lines({"-- branch 1", "F:hit1", "hit1", "hit2", "hit3",  //
                          "-- branch 0", "T:split", "hit3",                 //
                          "-- jumper 1", "F:hit1", "hit1", "hit3",          //
                          "-- jumper 0", "T:hit2", "hit2", "hit3",          //
                          "-- empty",                                       //
                          "-- thrower", "hit1", "hit4"})});

  cases.push_back({"advice sharing a location runs in kind order", KindSet().set(),
                   lines({"-- branch 1", "ME", "BE:iload", "BI:iload", "AI:iload", "BI:ifeq", "AI:ifeq", "BX:iload",
                          "BE:hit1", "F:hit1", "BC:hit1", "hit1", "BI:hit1", "AC:hit1", "AI:hit1", "BI:hit2", "BC:hit2",
                          "AI:hit2", "hit2", "AC:hit2", "BX:hit1", "BE:hit3", "BC:hit3", "hit3", "BI:hit3", "AC:hit3",
                          "AI:hit3", "BI:return", "AI:return", "BX:hit3", "MX",  //
                          "-- branch 0", "ME", "BE:iload", "BI:iload", "AI:iload", "BI:ifeq", "AI:ifeq", "BX:iload",
                          "T:split", "BE:hit3", "BC:hit3", "hit3", "BI:hit3", "AC:hit3", "AI:hit3", "BI:return",
                          "AI:return", "BX:hit3", "MX",  //
                          "-- jumper 1", "ME", "BE:iload", "BI:iload", "AI:iload", "BI:ifle", "AI:ifle", "BX:iload",
                          "BE:hit1", "F:hit1", "BC:hit1", "hit1", "BI:hit1", "AC:hit1", "AI:hit1", "BI:goto",
                          "AI:goto", "BX:hit1", "BE:hit3", "BC:hit3", "hit3", "BI:hit3", "AC:hit3", "AI:hit3",
                          "BI:return", "AI:return", "BX:hit3", "MX",  //
                          "-- jumper 0", "ME", "BE:iload", "BI:iload", "AI:iload", "BI:ifle", "AI:ifle", "BX:iload",
                          "BE:hit2", "T:hit2", "BC:hit2", "AI:hit2", "hit2", "BI:hit2", "AC:hit2", "BX:hit2",
                          "BE:hit3", "BC:hit3", "hit3", "BI:hit3", "AC:hit3", "AI:hit3", "BI:return", "AI:return",
                          "BX:hit3", "MX",  //
                          "-- empty", "ME", "BE:return", "BI:return", "AI:return", "BX:return", "MX",
                          "-- thrower", "ME", "BE:hit1", "BC:hit1", "hit1", "BI:hit1", "AC:hit1", "AI:hit1", "BI:new",
                          "AI:new", "BI:dup", "AI:dup", "BI:invokespecial", "BC:invokespecial", "AC:invokespecial",
                          "AI:invokespecial", "BI:athrow", "AI:athrow", "BX:hit1", "MX", "hit4"})});
  return cases;
}

std::string run_placement(const KindSet& kinds) {
  auto cls = probe_class();
  const auto original = emit_class(cls);
  ProbeTracer tracer(kinds);
  tf::PipelineConfig config;
  config.scope = cfweave::joinpoint::Scope::parse(
      "fixtures.Probe.branch, fixtures.Probe.jumper, fixtures.Probe.thrower, fixtures.Probe.empty");
  const auto hierarchy = tf::make_hierarchy(config);
  const auto woven = tf::instrument_class(original, tracer, config, hierarchy);
  const auto r = run_fixture({{cls.this_class, woven.bytes}}, "fixtures.Probe");
  if (r.exit_code != 0 || !r.err.empty()) {
    std::ostringstream os;
    os << "exit " << r.exit_code << ": " << r.err;
    throw std::runtime_error(os.str());
  }
  return r.out;
}

}  // namespace testsupport
