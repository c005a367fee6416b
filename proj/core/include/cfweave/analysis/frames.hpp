#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cfweave/analysis/hierarchy.hpp"
#include "cfweave/classfile/class_model.hpp"

namespace cfweave::analysis {

using classfile::VType;

// Types before an instruction. `locals` is slot-indexed: a long or double
// takes its slot plus a Top in the next one. `stack` holds one entry per
// value, so a long is a single entry of size 2.
struct Frame {
  std::vector<VType> locals;
  std::vector<VType> stack;

  int stack_slots() const;
  bool operator==(const Frame&) const = default;
};

// Producers of every value: sorted, distinct instruction indices. The
// producer of a local is the store that wrote it; a value shuffled by a
// dup/swap has that instruction as its producer.
struct SourceFrame {
  std::vector<std::vector<std::size_t>> locals;
  std::vector<std::vector<std::size_t>> stack;

  bool operator==(const SourceFrame&) const = default;
};

// One frame per instruction index (labels and line numbers share the frame
// of the next real instruction). nullopt marks unreachable code.
using Frames = std::vector<std::optional<Frame>>;
using SourceFrames = std::vector<std::optional<SourceFrame>>;

struct Successor {
  std::size_t insn;  // index of a real instruction
  bool handler = false;
  std::optional<std::string> catch_type;  // handler edges; absent = any
};

struct MaxValues {
  std::uint16_t max_stack = 0;
  std::uint16_t max_locals = 0;
  bool operator==(const MaxValues&) const = default;
};

// Type inference over one method body. `strict` turns reference merges
// that need an unknown class into ResolutionFailure instead of falling
// back to java/lang/Object.
class Analyzer {
 public:
  Analyzer(std::string class_name, const ClassHierarchy& hierarchy, bool strict = false);

  // Throws TypeConflict (stack underflow, wrong operand category, stack
  // height mismatch at a merge) or MalformedCode.
  Frames basic_frames(const classfile::MethodModel& method) const;
  SourceFrames source_frames(const classfile::MethodModel& method) const;

  Frame initial_frame(const classfile::MethodModel& method) const;
  // State after real instruction `i` of `code`, given the state before it.
  Frame execute(const classfile::CodeBody& code, std::size_t i, const Frame& in) const;
  // Least upper bound. Throws TypeConflict when stacks do not line up.
  Frame merge(const Frame& a, const Frame& b) const;
  VType merge(const VType& a, const VType& b) const;
  // State entering a handler from a protected instruction.
  static Frame handler_frame(const Frame& at, const std::optional<std::string>& catch_type);

  // Flow and handler successors of real instruction `i`.
  static std::vector<Successor> successors(const classfile::CodeBody& code, std::size_t i);

  // Smallest max_stack / max_locals the body needs.
  MaxValues recompute_max(const classfile::MethodModel& method) const;
  MaxValues recompute_max(const classfile::MethodModel& method, const Frames& frames) const;

  // StackMapTable in compressed form: one frame per jump target and handler
  // entry. Unreachable code must be removed first.
  std::vector<classfile::StackMapFrame> compute_stack_map(const classfile::MethodModel& method,
                                                          const Frames& frames) const;

  const std::string& class_name() const noexcept { return class_name_; }

 private:
  std::string class_name_;
  const ClassHierarchy& hierarchy_;
  bool strict_;
};

// Locals the body touches: max(parameter slots, highest slot used + size).
std::uint16_t scan_max_locals(const classfile::MethodModel& method);

// Slot list -> verification-type list (long/double collapse to one entry,
// trailing Tops dropped).
std::vector<VType> compact_locals(const std::vector<VType>& slots);

// Deletes real instructions `frames` marks unreachable and exception
// entries left with empty ranges. Returns the number of instructions
// removed.
std::size_t remove_unreachable(classfile::CodeBody& code, const Frames& frames);

// Puts a label right before every NEW lacking one, so uninitialized types
// can name their allocation site.
void ensure_new_labels(classfile::CodeBody& code);

}  // namespace cfweave::analysis
