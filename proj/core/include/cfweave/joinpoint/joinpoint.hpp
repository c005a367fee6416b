#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cfweave/analysis/frames.hpp"
#include "cfweave/cfg/cfg.hpp"
#include "cfweave/classfile/class_model.hpp"

namespace cfweave::joinpoint {

using classfile::Insn;
using classfile::Opcode;

// Visit order; the rank is the position in this list.
enum class Kind : std::uint8_t {
  OnMethodEnter,
  OnBasicBlockEnter,
  OnTrueBranchEnter,
  OnFalseBranchEnter,
  BeforeInstruction,
  BeforeMethodCall,
  AfterMethodCall,
  AfterInstruction,
  OnBasicBlockExit,
  OnMethodExit,
};

inline constexpr std::size_t kKindCount = 10;

const char* to_string(Kind k);
constexpr int rank(Kind k) { return static_cast<int>(k); }

enum class Side : std::uint8_t { Before, After };

// Weave location: right before or right after real instruction `insn`.
struct Anchor {
  std::size_t insn = 0;
  Side side = Side::Before;

  // Linear order of locations: before i < after i < before i+1.
  std::size_t key() const { return 2 * insn + (side == Side::After ? 1 : 0); }
  bool operator==(const Anchor&) const = default;
};

struct ClassCtx;
struct MethodCtx;
struct BasicBlockCtx;

struct InstructionCtx {
  std::size_t index = 0;
  const Insn* insn = nullptr;
  Opcode opcode = 0;
  const Insn* next = nullptr;      // next real instruction in the same block
  const Insn* previous = nullptr;  // previous real instruction in the same block
  bool is_conditional_jump = false;
  bool is_branching_instruction = false;  // jump, switch, athrow, ret, returns
  int stack_operands_if_cond_jump = -1;
  bool synthetic = false;  // goto added by edge splitting
  const analysis::Frame* basic_value_frame = nullptr;
  const analysis::SourceFrame* source_value_frame = nullptr;
  std::string method_name;
  const BasicBlockCtx* basic_block = nullptr;
  std::string class_name;
};

struct MethodCallCtx {
  const InstructionCtx* ins = nullptr;
  std::string method_owner;
  std::string method_name;
  std::string current_class_name;
  std::string descriptor;
  bool is_static = false;  // invokestatic or invokedynamic: no receiver
};

struct BasicBlockCtx {
  std::string id;
  std::size_t index = 0;     // class-wide
  std::size_t position = 0;  // in MethodCtx::cfg->blocks
  cfg::BlockType type = cfg::BlockType::Normal;
  bool synthetic = false;
  std::size_t first_real = 0;
  std::size_t last_real = 0;
  const MethodCtx* method = nullptr;

  const cfg::BasicBlock& block() const;
};

struct ClassCtx {
  std::string name;
  const classfile::ClassModel* model = nullptr;
};

struct MethodCtx {
  std::string name;
  std::string descriptor;
  classfile::AccessFlags access;
  std::size_t number_of_basic_blocks = 0;
  const BasicBlockCtx* entry_block = nullptr;
  std::vector<const BasicBlockCtx*> exit_blocks;
  const ClassCtx* class_ctx = nullptr;
  const cfg::Cfg* original_cfg = nullptr;
  const cfg::Cfg* cfg = nullptr;  // after splitting; instruction indices refer to it
};

using Context = std::variant<const MethodCtx*, const BasicBlockCtx*, const InstructionCtx*, const MethodCallCtx*>;

struct Joinpoint {
  Kind kind;
  Anchor anchor;
  Context context;
  // OnTrueBranchEnter / OnFalseBranchEnter: the conditional jump taken.
  const InstructionCtx* branch = nullptr;
};

struct PrepareOptions {
  bool split_critical_edges = false;
  bool strict_frames = false;
};

// Everything the weaver needs about one method: the transformed body,
// its graphs, frames, contexts and joinpoints. Contexts point into this
// object, so it is neither copied nor moved.
struct MethodView {
  MethodView() = default;
  MethodView(const MethodView&) = delete;
  MethodView& operator=(const MethodView&) = delete;

  std::size_t method_index = 0;  // into ClassModel::methods
  classfile::MethodModel method;  // body replaced by the transformed code
  cfg::Cfg original_cfg;
  cfg::Cfg cfg;
  analysis::Frames frames;
  analysis::SourceFrames sources;
  MethodCtx ctx;
  std::deque<BasicBlockCtx> blocks;
  std::deque<InstructionCtx> insns;  // one per real instruction
  std::deque<MethodCallCtx> calls;
  std::vector<Joinpoint> joinpoints;
  std::vector<const InstructionCtx*> insn_by_index;  // null for pseudo instructions
  std::vector<const MethodCallCtx*> call_by_index;

  const InstructionCtx* insn_ctx(std::size_t insn_index) const;
  const MethodCallCtx* call_ctx(std::size_t insn_index) const;
};

// Builds the graph (split on request, entry always isolated), frames,
// contexts and the sorted joinpoint list for one method with code.
// `block_base` is the first class-wide block index; the view's blocks take
// view.cfg.blocks.size() indices from there.
std::unique_ptr<MethodView> prepare_method(const ClassCtx& cls, std::size_t method_index,
                                           const analysis::ClassHierarchy& hierarchy, std::size_t block_base,
                                           const PrepareOptions& options);

// Joinpoints of a prepared method, sorted by (anchor, kind rank).
std::vector<Joinpoint> generate_joinpoints(const MethodView& view);

// Dotted-name filter. A pattern matches "pkg.Class.method" with `*`
// matching any run of characters; a pattern also matches everything below
// it ("com.example" covers "com.example.Aes.encrypt"). No patterns = all.
class Scope {
 public:
  Scope() = default;
  explicit Scope(std::vector<std::string> patterns);
  // Comma-separated list, blanks ignored.
  static Scope parse(std::string_view list);

  bool matches(std::string_view class_internal_name, std::string_view method_name) const;
  bool matches_class(std::string_view class_internal_name) const;  // any method could match
  bool empty() const noexcept { return patterns_.empty(); }
  const std::vector<std::string>& patterns() const noexcept { return patterns_; }

 private:
  std::vector<std::string> patterns_;
};

bool glob_match(std::string_view pattern, std::string_view text);

}  // namespace cfweave::joinpoint
