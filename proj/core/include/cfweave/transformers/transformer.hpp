#pragma once

#include <array>
#include <bitset>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cfweave/analysis/hierarchy.hpp"
#include "cfweave/joinpoint/joinpoint.hpp"
#include "cfweave/weaver/weaver.hpp"

namespace cfweave::transformers {

using joinpoint::BasicBlockCtx;
using joinpoint::InstructionCtx;
using joinpoint::Kind;
using joinpoint::MethodCallCtx;
using joinpoint::MethodCtx;
using weaver::DynamicContext;

using KindSet = std::bitset<joinpoint::kKindCount>;
KindSet kinds(std::initializer_list<Kind> list);

// Instrumentation written against the library. Each callback runs once per
// joinpoint of its kind and registers advice through the dynamic context;
// contexts are read-only.
class Transformer {
 public:
  virtual ~Transformer() = default;

  virtual std::string name() const = 0;
  // Kinds whose callbacks run. Listing a branch kind makes the pipeline
  // split critical edges first.
  virtual KindSet kinds() const { return KindSet().set(); }
  // Called before the joinpoints of each method are visited.
  virtual void begin_method(const MethodCtx&) {}

  virtual void on_method_enter(const MethodCtx&, DynamicContext&) {}
  virtual void on_basic_block_enter(const BasicBlockCtx&, DynamicContext&) {}
  virtual void on_true_branch_enter(const BasicBlockCtx&, DynamicContext&) {}
  virtual void on_false_branch_enter(const BasicBlockCtx&, DynamicContext&) {}
  virtual void before_instruction(const InstructionCtx&, DynamicContext&) {}
  virtual void before_method_call(const MethodCallCtx&, DynamicContext&) {}
  virtual void after_method_call(const MethodCallCtx&, DynamicContext&) {}
  virtual void after_instruction(const InstructionCtx&, DynamicContext&) {}
  virtual void on_basic_block_exit(const BasicBlockCtx&, DynamicContext&) {}
  virtual void on_method_exit(const MethodCtx&, DynamicContext&) {}

  // Classes the woven code calls at run time: (internal name, bytes).
  virtual std::vector<std::pair<std::string, classfile::Bytes>> runtime_classes() const { return {}; }
};

struct PipelineConfig {
  joinpoint::Scope scope;
  std::optional<std::filesystem::path> visualize_dir;
  std::vector<std::filesystem::path> classpath;
  bool strict_frames = false;
  bool strip_frames = false;
};

struct MethodReport {
  std::string name;
  std::string descriptor;
  std::array<std::size_t, joinpoint::kKindCount> joinpoints{};  // generated, per kind
  std::array<std::size_t, joinpoint::kKindCount> callbacks{};   // invoked, per kind
  std::size_t actions = 0;
  bool modified = false;

  std::size_t total_joinpoints() const;
  std::size_t total_callbacks() const;
};

struct ClassReport {
  std::string class_name;  // internal name
  bool in_scope = false;
  bool modified = false;
  std::vector<MethodReport> methods;  // methods in scope with code
  std::vector<std::filesystem::path> visualizations;

  std::size_t joinpoints() const;
  std::size_t callbacks() const;
  std::size_t actions() const;
  std::size_t methods_modified() const;
};

struct PipelineResult {
  classfile::ClassModel model;
  ClassReport report;
};

// Classpath entries plus the built-in table.
analysis::ClassHierarchy make_hierarchy(const PipelineConfig& config);

// Per method in scope: graph, optional edge splitting, joinpoints,
// callbacks in visit order, weaving, finalize. Methods without advice are
// left exactly as they were. Throws WeaveError listing every failed method.
PipelineResult run_pipeline(const classfile::ClassModel& cls, Transformer& t, const PipelineConfig& config,
                            const analysis::ClassHierarchy& hierarchy);

struct InstrumentedBytes {
  classfile::Bytes bytes;  // the input itself when nothing changed
  ClassReport report;
};

InstrumentedBytes instrument_class(std::span<const std::uint8_t> bytes, Transformer& t, const PipelineConfig& config,
                                   const analysis::ClassHierarchy& hierarchy);

// Line-oriented summary of one class.
std::string format_report(const ClassReport& r, bool verbose = false);

}  // namespace cfweave::transformers
