#pragma once

#include <string>
#include <vector>

#include "cfweave/transformers/transformer.hpp"

namespace testsupport {

using cfweave::transformers::KindSet;

// Prints one tag per joinpoint of the selected kinds:
//   ME / MX               method enter / exit
//   BE:<b> / BX:<b>       block enter / exit
//   T:<b> / F:<b>         true / false branch enter
//   BI:<i> / AI:<i>       before / after instruction
//   BC:<i> / AC:<i>       before / after method call
// <i> is hitN for calls to Probe.hitN and the mnemonic otherwise; <b> is
// the tag of the block's first instruction, or "split" for added blocks.
class ProbeTracer : public cfweave::transformers::Transformer {
 public:
  explicit ProbeTracer(KindSet kinds) : kinds_(kinds) {}

  std::string name() const override { return "probe-tracer"; }
  KindSet kinds() const override { return kinds_; }
  void on_method_enter(const cfweave::transformers::MethodCtx&, cfweave::transformers::DynamicContext& dc) override;
  void on_method_exit(const cfweave::transformers::MethodCtx&, cfweave::transformers::DynamicContext& dc) override;
  void on_basic_block_enter(const cfweave::transformers::BasicBlockCtx& bb,
                            cfweave::transformers::DynamicContext& dc) override;
  void on_basic_block_exit(const cfweave::transformers::BasicBlockCtx& bb,
                           cfweave::transformers::DynamicContext& dc) override;
  void on_true_branch_enter(const cfweave::transformers::BasicBlockCtx& bb,
                            cfweave::transformers::DynamicContext& dc) override;
  void on_false_branch_enter(const cfweave::transformers::BasicBlockCtx& bb,
                             cfweave::transformers::DynamicContext& dc) override;
  void before_instruction(const cfweave::transformers::InstructionCtx& ic,
                          cfweave::transformers::DynamicContext& dc) override;
  void after_instruction(const cfweave::transformers::InstructionCtx& ic,
                         cfweave::transformers::DynamicContext& dc) override;
  void before_method_call(const cfweave::transformers::MethodCallCtx& mc,
                          cfweave::transformers::DynamicContext& dc) override;
  void after_method_call(const cfweave::transformers::MethodCallCtx& mc,
                         cfweave::transformers::DynamicContext& dc) override;

 private:
  KindSet kinds_;
};

struct PlacementCase {
  std::string name;
  KindSet kinds;
  std::string expected;  // full stdout of Probe.main, derived by hand
};

// One case per placement rule group plus the shared-location order case.
std::vector<PlacementCase> placement_cases();

// Weaves ProbeTracer(kinds) into the scenario methods of Probe and runs it.
// Throws when no JVM is available.
std::string run_placement(const KindSet& kinds);

}  // namespace testsupport
