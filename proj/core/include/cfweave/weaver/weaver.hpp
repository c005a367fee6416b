#pragma once

#include <any>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cfweave/analysis/frames.hpp"
#include "cfweave/joinpoint/joinpoint.hpp"

namespace cfweave::weaver {

using classfile::Insn;
using classfile::Label;
using classfile::VType;
using joinpoint::Joinpoint;

// A value read at run time where the advice executes.
struct DynamicValue {
  enum class Handle : std::uint8_t {
    This,
    LocalVariable,
    StackValue,
    InstanceFieldOfThis,
    InstanceFieldOf,
    StaticFieldOfThisClass,
    StaticFieldOf,
    MethodArg,
    MethodReceiver,
    MethodResult,
    SyntheticLocal,
  };

  Handle handle = Handle::This;
  int index = 0;  // slot, stack depth, argument position or synthetic local id
  std::string owner;
  std::string name;
  std::string descriptor;  // field descriptor of the value when known, else empty
  std::shared_ptr<const DynamicValue> base;  // InstanceFieldOf
  VType type;                               // verification type at the joinpoint
  std::uint32_t origin = 0;                 // joinpoint serial it was created for

  // Parameter spelling used in a generated call: primitives keep their
  // exact letter, references become java/lang/Object.
  std::string param_descriptor() const;
};

// Method-scoped primitive local created by the advice.
struct SyntheticLocal {
  int id = 0;
  std::uint16_t slot = 0;
  std::string descriptor;  // I, J, F, D or Z
};

using Primitive = std::variant<std::int32_t, std::int64_t, float, double, bool>;

class StaticInvocation {
 public:
  using Param = std::variant<DynamicValue, std::int32_t, std::int64_t, float, double, bool, std::string>;

  StaticInvocation(std::string owner, std::string method) : owner_(std::move(owner)), method_(std::move(method)) {}

  StaticInvocation& add_param(DynamicValue v);
  StaticInvocation& add_param(std::int32_t v);
  StaticInvocation& add_param(std::int64_t v);
  StaticInvocation& add_param(float v);
  StaticInvocation& add_param(double v);
  StaticInvocation& add_param(bool v);
  StaticInvocation& add_param(std::string v);
  StaticInvocation& add_param(const char* v) { return add_param(std::string(v)); }
  // Accepts any of the types above; anything else is a RegistrationError.
  StaticInvocation& add_param(const std::any& v);

  const std::string& owner() const noexcept { return owner_; }
  const std::string& method() const noexcept { return method_; }
  const std::vector<Param>& params() const noexcept { return params_; }
  // "(...)V" built from the parameters.
  std::string descriptor() const;

 private:
  std::string owner_;
  std::string method_;
  std::vector<Param> params_;
};

enum class Stream : std::uint8_t { Out, Err };

namespace action {
struct Print {
  std::variant<std::string, DynamicValue> what;
  Stream stream = Stream::Out;
  bool newline = false;
};
struct PrintHash {
  DynamicValue value;
  Stream stream = Stream::Out;
};
struct Invoke {
  StaticInvocation call;
};
struct InsertRaw {
  std::vector<Insn> insns;
};
struct AddLocal {
  SyntheticLocal local;
  Primitive initial;
};
struct UpdateLocal {
  SyntheticLocal local;
  Primitive value;
};
}  // namespace action

using WeaveAction =
    std::variant<action::Print, action::PrintHash, action::Invoke, action::InsertRaw, action::AddLocal, action::UpdateLocal>;

class MethodWeaver;

// Handed to transformer callbacks: creates dynamic values valid at the
// current joinpoint and registers advice against it.
class DynamicContext {
 public:
  DynamicContext(MethodWeaver& weaver, const Joinpoint& jp, std::uint32_t serial)
      : weaver_(weaver), jp_(jp), serial_(serial) {}

  const Joinpoint& joinpoint() const noexcept { return jp_; }

  // Receiver of the method; a null constant in static methods.
  DynamicValue get_this() const;
  DynamicValue get_local_variable(int slot) const;
  // depth 0 is the top of the operand stack.
  DynamicValue get_stack_value(int depth) const;
  DynamicValue get_instance_field(const std::string& name) const;  // field of this class, on `this`
  DynamicValue get_instance_field(const DynamicValue& base, const std::string& owner, const std::string& name,
                                  const std::string& descriptor) const;
  DynamicValue get_static_field(const std::string& name) const;  // field of this class
  DynamicValue get_static_field(const std::string& owner, const std::string& name,
                                const std::string& descriptor) const;
  // 1-based; method-call joinpoints (the callee's argument) and method
  // joinpoints (the current method's parameter).
  DynamicValue get_method_arg(int position) const;
  DynamicValue get_method_receiver() const;
  DynamicValue get_method_target() const { return get_method_receiver(); }
  DynamicValue get_method_result() const;

  // Method joinpoints only. Types: int, long, float, double, boolean.
  SyntheticLocal add_local_variable(Primitive initial);
  void update_local_variable(const SyntheticLocal& local, Primitive value);
  DynamicValue get_synthetic_local(const SyntheticLocal& local) const;

  void print(const std::string& text, Stream s = Stream::Out);
  void print(const DynamicValue& v, Stream s = Stream::Out);
  void println(const std::string& text, Stream s = Stream::Out);
  void println(const DynamicValue& v, Stream s = Stream::Out);
  void print_hash(const DynamicValue& v, Stream s = Stream::Out);
  void invoke(const StaticInvocation& call);
  // Inserted verbatim; stack balance is the caller's business.
  void insert(std::vector<Insn> insns);

  // Fresh label and fresh local slot(s) for raw insertion.
  Label new_label();
  std::uint16_t new_local(int size = 1);

  // Frame at the joinpoint location (after the instruction for "after" anchors).
  const analysis::Frame& frame() const;

 private:
  MethodWeaver& weaver_;
  const Joinpoint& jp_;
  std::uint32_t serial_;
};

// Collects advice for one prepared method and weaves it into
// `view.method`.
class MethodWeaver {
 public:
  MethodWeaver(joinpoint::MethodView& view, const analysis::ClassHierarchy& hierarchy);

  // Joinpoints must come from view.joinpoints.
  DynamicContext context(const Joinpoint& jp);
  void add(const Joinpoint& jp, WeaveAction a);

  std::size_t action_count() const noexcept { return action_count_; }
  std::size_t synthetic_local_count() const noexcept { return synthetic_.size(); }

  // Inlines every registered action in anchor / kind-rank / registration
  // order. The method then still needs finalize().
  void apply();

  const joinpoint::MethodView& view() const noexcept { return view_; }

 private:
  friend class DynamicContext;

  struct Pending {
    const Joinpoint* jp;
    std::uint32_t serial;
    WeaveAction action;
  };

  const analysis::Frame& frame_at(const Joinpoint& jp);
  std::uint32_t serial_of(const Joinpoint& jp) const;
  SyntheticLocal new_synthetic(const std::string& descriptor);
  std::uint16_t allocate(int size);

  joinpoint::MethodView& view_;
  analysis::Analyzer analyzer_;
  std::map<std::size_t, analysis::Frame> after_frames_;
  std::vector<Pending> pending_;
  std::vector<SyntheticLocal> synthetic_;
  std::size_t action_count_ = 0;
  std::uint16_t base_locals_ = 0;
  std::uint16_t next_slot_ = 0;
};

struct FinalizeOptions {
  bool strip_frames = false;
  bool strict_frames = false;
};

// Recomputes max_stack/max_locals and the stack map of a woven method,
// drops unreachable code, and widens conditional jumps that no longer
// reach. Throws WeaveError naming `class_name.method`.
void finalize(classfile::MethodModel& method, const classfile::ClassModel& cls,
              const analysis::ClassHierarchy& hierarchy, const FinalizeOptions& options = {});

// Instructions pushing / storing / loading a value of `type`.
Insn load_insn(const VType& type, std::uint16_t slot);
Insn store_insn(const VType& type, std::uint16_t slot);
std::vector<Insn> push_constant(const Primitive& value);

}  // namespace cfweave::weaver
