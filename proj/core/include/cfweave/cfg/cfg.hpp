#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cfweave/classfile/class_model.hpp"

namespace cfweave::cfg {

using classfile::Insn;
using classfile::Label;

enum class BlockType : std::uint8_t { Normal, ConditionalJump, Goto, Switch, Return };
enum class EdgeKind : std::uint8_t { FallThrough, JumpTrue, JumpFalse, Goto, SwitchCase, HandlerEntry };

const char* to_string(BlockType t);
const char* to_string(EdgeKind k);

struct Edge {
  std::size_t from;
  std::size_t to;
  EdgeKind kind;
  std::optional<std::int32_t> case_value;  // SwitchCase only; absent for the default target
  bool operator==(const Edge&) const = default;
};

struct BasicBlock {
  std::string id;           // "<method>.<index>"
  std::size_t index = 0;    // unique within the class
  BlockType type = BlockType::Normal;
  std::size_t first = 0;    // insn range, inclusive; covers leading labels
  std::size_t last = 0;
  std::size_t first_real = 0;
  std::size_t last_real = 0;
  std::vector<std::size_t> successor_edges;  // into Cfg::edges
  std::vector<std::size_t> predecessors;     // block positions, distinct, in first-seen order
  std::optional<std::size_t> true_branch;    // block positions
  std::optional<std::size_t> false_branch;
  bool synthetic = false;

  std::size_t size() const { return last - first + 1; }
};

// Control-flow graph of one method. The graph owns a copy of the method's
// instruction list; block ranges index into it. Blocks are stored in
// instruction order and referenced by their position in `blocks`.
struct Cfg {
  std::string method_name;
  std::string descriptor;
  std::vector<Insn> insns;
  std::vector<classfile::ExceptionHandler> exception_table;
  std::uint32_t next_label_id = 1;
  std::vector<Label> synthetic_labels;  // first label of every synthetic block

  std::vector<BasicBlock> blocks;
  std::vector<Edge> edges;
  std::size_t entry = 0;
  std::vector<std::size_t> exits;

  // Position of the block holding insns[i].
  std::size_t block_of(std::size_t insn) const;

  // Distinct successor blocks, ignoring HandlerEntry edges.
  std::vector<std::size_t> flow_successors(std::size_t block) const;
  // Distinct predecessors through non-HandlerEntry edges.
  std::vector<std::size_t> flow_predecessors(std::size_t block) const;

  std::size_t synthetic_count() const;
};

// Leaders: first instruction, branch targets, instructions after a branch
// and exception handler entries. Throws MalformedCode for dangling labels,
// subroutines (jsr/ret) or code that falls off the end.
Cfg build_cfg(const classfile::MethodModel& method, std::size_t first_block_index = 0);
Cfg build_cfg(std::string method_name, std::string descriptor, const classfile::CodeBody& code,
              std::size_t first_block_index = 0);

// Inserts a synthetic `goto` block on every edge u->v where u has several
// successors and v several predecessors (HandlerEntry edges do not count),
// and on the taken edge of a conditional jump whose two outcomes reach the
// same block. Returns a new graph; `cfg` is left untouched.
Cfg split_critical_edges(const Cfg& cfg);

// When the first instruction is itself a branch target, prepends a
// synthetic `goto` block so the entry block has no predecessors.
Cfg isolate_entry(const Cfg& cfg);

// Reassigns class-wide block indices starting at `base`, returns the next
// free index. Original blocks come first, in code order, then synthetic
// ones, so splitting does not change the ids of original blocks.
std::size_t renumber_blocks(Cfg& cfg, std::size_t base);

// Writes `<class>.<method>.<descriptor-hash>.html` into out_dir and returns
// its path. Throws IoError.
std::filesystem::path render_cfg_html(const std::string& class_name, const Cfg& before, const Cfg* after,
                                      const std::filesystem::path& out_dir);

// The HTML document alone.
std::string cfg_html(const std::string& class_name, const Cfg& before, const Cfg* after);

}  // namespace cfweave::cfg
