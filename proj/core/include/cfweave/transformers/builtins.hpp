#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "cfweave/transformers/transformer.hpp"

namespace cfweave::transformers {

// Prints "Entered block:<class>.<method>.<index>" on block entry and
// "Exited block:..." on exit.
class BasicBlockTracer : public Transformer {
 public:
  std::string name() const override { return "trace-blocks"; }
  KindSet kinds() const override;
  void on_basic_block_enter(const BasicBlockCtx& bb, DynamicContext& dc) override;
  void on_basic_block_exit(const BasicBlockCtx& bb, DynamicContext& dc) override;

  static std::string block_name(const BasicBlockCtx& bb);
};

// Reports iterator creation from lists, and hasNext()/next() calls, to the
// IteratorMonitor runtime class.
class IteratorMonitor : public Transformer {
 public:
  static constexpr const char* kMonitorClass = "IteratorMonitor";

  std::string name() const override { return "monitor-iterators"; }
  KindSet kinds() const override;
  void before_method_call(const MethodCallCtx& mc, DynamicContext& dc) override;
  void after_method_call(const MethodCallCtx& mc, DynamicContext& dc) override;
  std::vector<std::pair<std::string, classfile::Bytes>> runtime_classes() const override;
};

// Inline monitor against test inversion: operands of every conditional
// jump are copied aside, and each branch target re-evaluates the test on
// the copies. A disagreement is reported to InversionReporter.inversion;
// every re-evaluation counts one InversionReporter.event.
class TestInversionDetector : public Transformer {
 public:
  static constexpr const char* kReporterClass = "InversionReporter";

  std::string name() const override { return "detect-test-inversions"; }
  KindSet kinds() const override;
  void begin_method(const MethodCtx& m) override;
  void before_instruction(const InstructionCtx& ic, DynamicContext& dc) override;
  void on_true_branch_enter(const BasicBlockCtx& bb, DynamicContext& dc) override;
  void on_false_branch_enter(const BasicBlockCtx& bb, DynamicContext& dc) override;
  std::vector<std::pair<std::string, classfile::Bytes>> runtime_classes() const override;

 protected:
  const std::vector<std::uint16_t>& copies_of(const InstructionCtx& jump, DynamicContext& dc);

 private:
  void check(const BasicBlockCtx& bb, DynamicContext& dc, bool taken);

  std::map<const InstructionCtx*, std::vector<std::uint16_t>> copies_;
};

// The detector plus a fault: the `ordinal`-th conditional jump (0-based,
// code order) of every method named `method` has its outcome flipped, as a
// corrupted branch would. Used to show the detector fires.
class FaultInjector : public TestInversionDetector {
 public:
  FaultInjector(std::string method, std::size_t ordinal) : method_(std::move(method)), ordinal_(ordinal) {}

  std::string name() const override { return "inject-fault"; }
  void begin_method(const MethodCtx& m) override;
  void before_instruction(const InstructionCtx& ic, DynamicContext& dc) override;

  std::size_t injected() const noexcept { return injected_; }

 private:
  std::string method_;
  std::size_t ordinal_;
  std::size_t seen_ = 0;
  std::size_t injected_ = 0;
  bool active_ = false;
};

// Names accepted by make_builtin.
std::vector<std::string> builtin_names();
// nullptr for unknown names.
std::unique_ptr<Transformer> make_builtin(const std::string& name);

// Runtime classes, generated.
classfile::Bytes iterator_monitor_class();
classfile::Bytes inversion_reporter_class();

// Instructions replacing the operands of conditional jump `jump` so that
// it takes the other outcome; labels come from `dc`.
std::vector<classfile::Insn> flip_outcome(const InstructionCtx& jump, DynamicContext& dc);

}  // namespace cfweave::transformers
