#include "cfweave/joinpoint/joinpoint.hpp"

#include <algorithm>
#include <cctype>

#include "cfweave/classfile/descriptor.hpp"
#include "cfweave/error.hpp"

namespace cfweave::joinpoint {

using namespace classfile;

const char* to_string(Kind k) {
  switch (k) {
    case Kind::OnMethodEnter: return "OnMethodEnter";
    case Kind::OnBasicBlockEnter: return "OnBasicBlockEnter";
    case Kind::OnTrueBranchEnter: return "OnTrueBranchEnter";
    case Kind::OnFalseBranchEnter: return "OnFalseBranchEnter";
    case Kind::BeforeInstruction: return "BeforeInstruction";
    case Kind::BeforeMethodCall: return "BeforeMethodCall";
    case Kind::AfterMethodCall: return "AfterMethodCall";
    case Kind::AfterInstruction: return "AfterInstruction";
    case Kind::OnBasicBlockExit: return "OnBasicBlockExit";
    case Kind::OnMethodExit: return "OnMethodExit";
  }
  return "?";
}

const cfg::BasicBlock& BasicBlockCtx::block() const { return method->cfg->blocks.at(position); }

const InstructionCtx* MethodView::insn_ctx(std::size_t insn_index) const {
  return insn_index < insn_by_index.size() ? insn_by_index[insn_index] : nullptr;
}

const MethodCallCtx* MethodView::call_ctx(std::size_t insn_index) const {
  return insn_index < call_by_index.size() ? call_by_index[insn_index] : nullptr;
}

namespace {

bool is_branching(Opcode o) { return is_conditional_jump(o) || ends_flow(o) || o == op::JSR || o == op::JSR_W; }

}  // namespace

std::unique_ptr<MethodView> prepare_method(const ClassCtx& cls, std::size_t method_index,
                                           const analysis::ClassHierarchy& hierarchy, std::size_t block_base,
                                           const PrepareOptions& options) {
  const MethodModel& source = cls.model->methods.at(method_index);
  if (!source.code) throw MalformedCode(source.name + source.descriptor + ": method has no code");

  auto v = std::make_unique<MethodView>();
  v->method_index = method_index;
  v->original_cfg = cfg::build_cfg(source, block_base);
  cfg::Cfg g = options.split_critical_edges ? cfg::split_critical_edges(v->original_cfg) : v->original_cfg;
  g = cfg::isolate_entry(g);
  cfg::renumber_blocks(g, block_base);
  v->cfg = std::move(g);

  v->method = source;
  CodeBody& code = *v->method.code;
  code.insns = v->cfg.insns;
  code.exception_table = v->cfg.exception_table;
  code.next_label_id = v->cfg.next_label_id;

  const analysis::Analyzer analyzer(cls.name, hierarchy, options.strict_frames);
  v->frames = analyzer.basic_frames(v->method);
  v->sources = analyzer.source_frames(v->method);

  MethodCtx& m = v->ctx;
  m.name = source.name;
  m.descriptor = source.descriptor;
  m.access = source.access;
  m.number_of_basic_blocks = v->cfg.blocks.size();
  m.class_ctx = &cls;
  m.original_cfg = &v->original_cfg;
  m.cfg = &v->cfg;

  const auto& insns = v->cfg.insns;
  v->insn_by_index.assign(insns.size(), nullptr);
  v->call_by_index.assign(insns.size(), nullptr);
  for (std::size_t p = 0; p < v->cfg.blocks.size(); ++p) {
    const cfg::BasicBlock& b = v->cfg.blocks[p];
    BasicBlockCtx& bc = v->blocks.emplace_back();
    bc.id = b.id;
    bc.index = b.index;
    bc.position = p;
    bc.type = b.type;
    bc.synthetic = b.synthetic;
    bc.first_real = b.first_real;
    bc.last_real = b.last_real;
    bc.method = &m;

    InstructionCtx* prev = nullptr;
    for (std::size_t i = b.first; i <= b.last; ++i) {
      if (!insns[i].is_real()) continue;
      InstructionCtx& ic = v->insns.emplace_back();
      ic.index = i;
      ic.insn = &insns[i];
      ic.opcode = insns[i].opcode;
      if (prev != nullptr) {
        ic.previous = prev->insn;
        prev->next = ic.insn;
      }
      ic.is_conditional_jump = is_conditional_jump(ic.opcode);
      ic.is_branching_instruction = is_branching(ic.opcode);
      ic.stack_operands_if_cond_jump = conditional_jump_operands(ic.opcode);
      ic.synthetic = b.synthetic;
      if (v->frames[i]) ic.basic_value_frame = &*v->frames[i];
      if (v->sources[i]) ic.source_value_frame = &*v->sources[i];
      ic.method_name = source.name;
      ic.basic_block = &bc;
      ic.class_name = cls.name;
      v->insn_by_index[i] = &ic;
      prev = &ic;

      if (is_invoke(ic.opcode)) {
        MethodCallCtx& mc = v->calls.emplace_back();
        mc.ins = &ic;
        mc.current_class_name = cls.name;
        if (const auto* mo = insns[i].get_if<operand::Method>()) {
          mc.method_owner = mo->ref.owner;
          mc.method_name = mo->ref.name;
          mc.descriptor = mo->ref.descriptor;
        } else {
          const auto& dyn = insns[i].as<operand::InvokeDynamic>();
          mc.method_name = dyn.name;
          mc.descriptor = dyn.descriptor;
        }
        mc.is_static = ic.opcode == op::INVOKESTATIC || ic.opcode == op::INVOKEDYNAMIC;
        v->call_by_index[i] = &mc;
      }
    }
  }
  m.entry_block = &v->blocks[v->cfg.entry];
  for (const std::size_t e : v->cfg.exits) m.exit_blocks.push_back(&v->blocks[e]);

  v->joinpoints = generate_joinpoints(*v);
  return v;
}

std::vector<Joinpoint> generate_joinpoints(const MethodView& view) {
  std::vector<Joinpoint> out;
  const auto& insns = view.cfg.insns;
  auto reachable = [&](std::size_t insn) { return insn < view.frames.size() && view.frames[insn].has_value(); };

  const BasicBlockCtx& entry = *view.ctx.entry_block;
  if (reachable(entry.first_real))
    out.push_back({Kind::OnMethodEnter, {entry.first_real, Side::Before}, &view.ctx, nullptr});

  for (const BasicBlockCtx& bc : view.blocks) {
    if (bc.synthetic || !reachable(bc.first_real)) continue;
    const cfg::BasicBlock& b = bc.block();
    out.push_back({Kind::OnBasicBlockEnter, {bc.first_real, Side::Before}, &bc, nullptr});

    for (std::size_t i = b.first; i <= b.last; ++i) {
      if (!insns[i].is_real()) continue;
      const InstructionCtx* ic = view.insn_by_index[i];
      // Block-entry instructions get their "before" advice after them, block
      // exits their "after" advice before them. Code is never placed after
      // an instruction that does not fall through.
      const bool branching = ic->is_branching_instruction;
      const Side before_side = (i == bc.first_real && !branching) ? Side::After : Side::Before;
      const Side after_side = (i == bc.last_real || branching) ? Side::Before : Side::After;
      out.push_back({Kind::BeforeInstruction, {i, before_side}, ic, nullptr});
      if (const MethodCallCtx* mc = view.call_by_index[i]) {
        out.push_back({Kind::BeforeMethodCall, {i, Side::Before}, mc, nullptr});
        out.push_back({Kind::AfterMethodCall, {i, Side::After}, mc, nullptr});
      }
      out.push_back({Kind::AfterInstruction, {i, after_side}, ic, nullptr});
    }

    const Side exit_side = view.insn_by_index[bc.last_real]->is_branching_instruction ? Side::Before : Side::After;
    out.push_back({Kind::OnBasicBlockExit, {bc.last_real, exit_side}, &bc, nullptr});

    if (b.type == cfg::BlockType::ConditionalJump) {
      const InstructionCtx* jump = view.insn_by_index[bc.last_real];
      if (b.true_branch) {
        const BasicBlockCtx& t = view.blocks[*b.true_branch];
        out.push_back({Kind::OnTrueBranchEnter, {t.first_real, Side::Before}, &t, jump});
      }
      if (b.false_branch) {
        const BasicBlockCtx& f = view.blocks[*b.false_branch];
        out.push_back({Kind::OnFalseBranchEnter, {f.first_real, Side::Before}, &f, jump});
      }
    }
  }

  for (const BasicBlockCtx* e : view.ctx.exit_blocks)
    if (!e->synthetic && reachable(e->last_real))
      out.push_back({Kind::OnMethodExit, {e->last_real, Side::Before}, &view.ctx, nullptr});

  std::stable_sort(out.begin(), out.end(), [](const Joinpoint& a, const Joinpoint& b) {
    if (a.anchor.key() != b.anchor.key()) return a.anchor.key() < b.anchor.key();
    return rank(a.kind) < rank(b.kind);
  });
  return out;
}

// ---- scope ----

namespace {

// Pattern positions reachable after consuming all of `text`.
std::vector<bool> glob_states(std::string_view p, std::string_view text) {
  std::vector<bool> cur(p.size() + 1, false);
  auto close = [&](std::vector<bool>& s) {
    for (std::size_t j = 0; j < p.size(); ++j)
      if (s[j] && p[j] == '*') s[j + 1] = true;
  };
  cur[0] = true;
  close(cur);
  for (const char c : text) {
    std::vector<bool> nxt(p.size() + 1, false);
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (!cur[j]) continue;
      if (p[j] == '*') nxt[j] = true;
      else if (p[j] == c) nxt[j + 1] = true;
    }
    close(nxt);
    cur = std::move(nxt);
  }
  return cur;
}

}  // namespace

bool glob_match(std::string_view pattern, std::string_view text) { return glob_states(pattern, text).back(); }

Scope::Scope(std::vector<std::string> patterns) : patterns_(std::move(patterns)) {}

Scope Scope::parse(std::string_view list) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    std::size_t end = list.find(',', start);
    if (end == std::string_view::npos) end = list.size();
    std::string_view item = list.substr(start, end - start);
    while (!item.empty() && std::isspace(static_cast<unsigned char>(item.front()))) item.remove_prefix(1);
    while (!item.empty() && std::isspace(static_cast<unsigned char>(item.back()))) item.remove_suffix(1);
    if (!item.empty()) out.emplace_back(item);
    start = end + 1;
  }
  return Scope(std::move(out));
}

bool Scope::matches(std::string_view class_internal_name, std::string_view method_name) const {
  if (patterns_.empty()) return true;
  const std::string full = dotted(class_internal_name) + "." + std::string(method_name);
  return std::any_of(patterns_.begin(), patterns_.end(), [&](const std::string& p) {
    return glob_match(p, full) || glob_match(p + ".*", full);
  });
}

bool Scope::matches_class(std::string_view class_internal_name) const {
  if (patterns_.empty()) return true;
  // Some "<class>.<method>" could match when a pattern can still be
  // completed after reading "<class>.".
  const std::string prefix = dotted(class_internal_name) + ".";
  const std::string cls = dotted(class_internal_name);
  return std::any_of(patterns_.begin(), patterns_.end(), [&](const std::string& p) {
    if (glob_match(p, cls)) return true;
    const auto states = glob_states(p, prefix);
    return std::find(states.begin(), states.end(), true) != states.end();
  });
}

}  // namespace cfweave::joinpoint
