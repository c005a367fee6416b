#include "cfweave/cfg/cfg.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>

namespace cfweave::cfg {

using namespace classfile;

const char* to_string(BlockType t) {
  switch (t) {
    case BlockType::Normal: return "Normal";
    case BlockType::ConditionalJump: return "ConditionalJump";
    case BlockType::Goto: return "Goto";
    case BlockType::Switch: return "Switch";
    case BlockType::Return: return "Return";
  }
  return "?";
}

const char* to_string(EdgeKind k) {
  switch (k) {
    case EdgeKind::FallThrough: return "FallThrough";
    case EdgeKind::JumpTrue: return "True";
    case EdgeKind::JumpFalse: return "False";
    case EdgeKind::Goto: return "Goto";
    case EdgeKind::SwitchCase: return "Case";
    case EdgeKind::HandlerEntry: return "Handler";
  }
  return "?";
}

std::size_t Cfg::block_of(std::size_t insn) const {
  auto it = std::upper_bound(blocks.begin(), blocks.end(), insn,
                             [](std::size_t i, const BasicBlock& b) { return i < b.first; });
  if (it == blocks.begin()) throw MalformedCode("instruction " + std::to_string(insn) + " is outside every block");
  return static_cast<std::size_t>(std::prev(it) - blocks.begin());
}

std::vector<std::size_t> Cfg::flow_successors(std::size_t block) const {
  std::vector<std::size_t> out;
  for (auto e : blocks[block].successor_edges) {
    const auto& edge = edges[e];
    if (edge.kind == EdgeKind::HandlerEntry) continue;
    if (std::find(out.begin(), out.end(), edge.to) == out.end()) out.push_back(edge.to);
  }
  return out;
}

std::vector<std::size_t> Cfg::flow_predecessors(std::size_t block) const {
  std::vector<std::size_t> out;
  for (const auto& edge : edges) {
    if (edge.to != block || edge.kind == EdgeKind::HandlerEntry) continue;
    if (std::find(out.begin(), out.end(), edge.from) == out.end()) out.push_back(edge.from);
  }
  return out;
}

std::size_t Cfg::synthetic_count() const {
  return static_cast<std::size_t>(std::count_if(blocks.begin(), blocks.end(), [](const auto& b) { return b.synthetic; }));
}

namespace {

BlockType classify(Opcode o) {
  if (is_conditional_jump(o)) return BlockType::ConditionalJump;
  if (is_unconditional_jump(o)) return BlockType::Goto;
  if (is_switch(o)) return BlockType::Switch;
  if (is_return(o) || o == op::ATHROW) return BlockType::Return;
  return BlockType::Normal;
}

Cfg build_impl(std::string name, std::string descriptor, std::vector<Insn> insns,
               std::vector<ExceptionHandler> handlers, std::uint32_t next_label, std::vector<Label> synthetic,
               std::size_t base) {
  Cfg g;
  g.method_name = std::move(name);
  g.descriptor = std::move(descriptor);
  g.insns = std::move(insns);
  g.exception_table = std::move(handlers);
  g.next_label_id = next_label;
  g.synthetic_labels = std::move(synthetic);
  renumber(g.insns);
  const auto& code = g.insns;
  const std::size_t n = code.size();
  const std::string where = g.method_name + g.descriptor;

  std::unordered_map<Label, std::size_t> label_pos;
  for (std::size_t i = 0; i < n; ++i)
    if (code[i].is_label() && !label_pos.emplace(code[i].as<operand::Label>().label, i).second)
      throw MalformedCode(where + ": label defined twice");
  auto position = [&](Label l) {
    auto it = label_pos.find(l);
    if (it == label_pos.end()) throw MalformedCode(where + ": reference to undefined label L" + std::to_string(l.id));
    return it->second;
  };
  // First real instruction at or after i, n if none.
  std::vector<std::size_t> next_real(n + 1, n);
  for (std::size_t i = n; i-- > 0;) next_real[i] = code[i].is_real() ? i : next_real[i + 1];
  auto real_at = [&](Label l) {
    const auto r = next_real[position(l)];
    if (r == n) throw MalformedCode(where + ": branch to the end of the code");
    return r;
  };

  std::set<std::size_t> leaders;
  if (next_real[0] == n) throw MalformedCode(where + ": method body has no instructions");
  leaders.insert(next_real[0]);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& insn = code[i];
    if (!insn.is_real()) continue;
    const Opcode o = insn.opcode;
    if (o == op::JSR || o == op::RET) throw MalformedCode(where + ": subroutines (jsr/ret) are not supported");
    for (auto t : insn.branch_targets()) leaders.insert(real_at(t));
    if ((is_conditional_jump(o) || ends_flow(o)) && next_real[i + 1] != n) leaders.insert(next_real[i + 1]);
  }
  for (const auto& h : g.exception_table) {
    position(h.start);
    position(h.end);
    leaders.insert(real_at(h.handler));
  }

  const std::vector<std::size_t> heads(leaders.begin(), leaders.end());
  for (std::size_t k = 0; k < heads.size(); ++k) {
    BasicBlock b;
    b.first = k == 0 ? 0 : g.blocks.back().last_real + 1;
    b.first_real = heads[k];
    const std::size_t stop = k + 1 < heads.size() ? heads[k + 1] : n;
    b.last_real = b.first_real;
    for (std::size_t i = b.first_real; i < stop; ++i)
      if (code[i].is_real()) b.last_real = i;
    g.blocks.push_back(std::move(b));
  }
  for (std::size_t k = 0; k < g.blocks.size(); ++k)
    g.blocks[k].last = k + 1 < g.blocks.size() ? g.blocks[k + 1].first - 1 : n - 1;

  std::set<Label> synth(g.synthetic_labels.begin(), g.synthetic_labels.end());
  auto add_edge = [&](std::size_t from, std::size_t to, EdgeKind kind, std::optional<std::int32_t> value = {}) {
    Edge e{from, to, kind, value};
    if (kind == EdgeKind::HandlerEntry)
      for (auto existing : g.blocks[from].successor_edges)
        if (g.edges[existing] == e) return;
    g.blocks[from].successor_edges.push_back(g.edges.size());
    g.edges.push_back(e);
    auto& preds = g.blocks[to].predecessors;
    if (std::find(preds.begin(), preds.end(), from) == preds.end()) preds.push_back(from);
  };

  for (std::size_t k = 0; k < g.blocks.size(); ++k) {
    auto& b = g.blocks[k];
    b.index = base + k;
    b.id = g.method_name + "." + std::to_string(b.index);
    for (std::size_t i = b.first; i < b.first_real; ++i)
      if (code[i].is_label() && synth.count(code[i].as<operand::Label>().label)) b.synthetic = true;
    const Insn& last = code[b.last_real];
    b.type = classify(last.opcode);
    const bool has_next = k + 1 < g.blocks.size();
    switch (b.type) {
      case BlockType::Normal:
        if (!has_next) throw MalformedCode(where + ": execution falls off the end of the code");
        add_edge(k, k + 1, EdgeKind::FallThrough);
        break;
      case BlockType::ConditionalJump: {
        if (!has_next) throw MalformedCode(where + ": conditional jump at the end of the code");
        const auto t = g.block_of(real_at(last.as<operand::Jump>().target));
        add_edge(k, t, EdgeKind::JumpTrue);
        add_edge(k, k + 1, EdgeKind::JumpFalse);
        g.blocks[k].true_branch = t;
        g.blocks[k].false_branch = k + 1;
        break;
      }
      case BlockType::Goto:
        add_edge(k, g.block_of(real_at(last.as<operand::Jump>().target)), EdgeKind::Goto);
        break;
      case BlockType::Switch:
        if (const auto* t = last.get_if<operand::TableSwitch>()) {
          for (std::size_t c = 0; c < t->targets.size(); ++c)
            add_edge(k, g.block_of(real_at(t->targets[c])), EdgeKind::SwitchCase,
                     static_cast<std::int32_t>(t->low + static_cast<std::int64_t>(c)));
          add_edge(k, g.block_of(real_at(t->default_target)), EdgeKind::SwitchCase);
        } else {
          const auto& l = last.as<operand::LookupSwitch>();
          for (const auto& [key, target] : l.pairs) add_edge(k, g.block_of(real_at(target)), EdgeKind::SwitchCase, key);
          add_edge(k, g.block_of(real_at(l.default_target)), EdgeKind::SwitchCase);
        }
        break;
      case BlockType::Return:
        g.exits.push_back(k);
        break;
    }
  }
  for (const auto& h : g.exception_table) {
    const auto s = next_real[position(h.start)];
    if (s == n || s >= position(h.end)) continue;  // empty range
    add_edge(g.block_of(s), g.block_of(real_at(h.handler)), EdgeKind::HandlerEntry);
  }
  renumber_blocks(g, base);
  return g;
}

// Label at the start of block b, creating one (to be inserted right before
// its first real instruction) if none exists.
Label block_label(const Cfg& g, std::size_t b, std::uint32_t& next_label, std::map<std::size_t, Label>& created) {
  const auto& blk = g.blocks[b];
  for (std::size_t i = blk.first; i < blk.first_real; ++i)
    if (g.insns[i].is_label()) return g.insns[i].as<operand::Label>().label;
  auto [it, inserted] = created.try_emplace(blk.first_real);
  if (inserted) it->second = Label{next_label++};
  return it->second;
}

}  // namespace

Cfg build_cfg(std::string method_name, std::string descriptor, const CodeBody& code, std::size_t first_block_index) {
  return build_impl(std::move(method_name), std::move(descriptor), code.insns, code.exception_table,
                    code.next_label_id, {}, first_block_index);
}

Cfg build_cfg(const MethodModel& method, std::size_t first_block_index) {
  if (!method.code) throw MalformedCode(method.name + method.descriptor + ": method has no code");
  return build_cfg(method.name, method.descriptor, *method.code, first_block_index);
}

Cfg split_critical_edges(const Cfg& g) {
  std::uint32_t next_label = g.next_label_id;
  std::map<std::size_t, Label> created;                 // first_real -> new label
  std::map<std::size_t, std::vector<Insn>> before;      // insn position -> synthetic block
  std::vector<Insn> tail;                               // synthetic blocks placed after the code
  std::map<std::size_t, std::map<Label, Label>> retarget;  // insn -> (old target -> new target)
  std::vector<Label> synthetic = g.synthetic_labels;

  std::unordered_map<Label, std::size_t> label_pos;
  for (std::size_t i = 0; i < g.insns.size(); ++i)
    if (g.insns[i].is_label()) label_pos.emplace(g.insns[i].as<operand::Label>().label, i);

  auto is_critical = [&](std::size_t u, std::size_t v) {
    return g.flow_successors(u).size() > 1 && g.flow_predecessors(v).size() > 1;
  };
  auto synth_block = [&](Label target) {
    const Label l{next_label++};
    synthetic.push_back(l);
    return std::vector<Insn>{Insn::label(l), Insn::jump(op::GOTO, target)};
  };

  for (std::size_t u = 0; u < g.blocks.size(); ++u) {
    const auto& b = g.blocks[u];
    const Insn& last = g.insns[b.last_real];
    if (b.type == BlockType::ConditionalJump) {
      const auto t = *b.true_branch, f = *b.false_branch;
      if (is_critical(u, f)) {
        auto blk = synth_block(block_label(g, f, next_label, created));
        auto& slot = before[g.blocks[f].first];
        slot.insert(slot.end(), blk.begin(), blk.end());
      }
      if (is_critical(u, t) || t == f) {
        auto blk = synth_block(block_label(g, t, next_label, created));
        retarget[b.last_real][last.as<operand::Jump>().target] = blk[0].as<operand::Label>().label;
        tail.insert(tail.end(), blk.begin(), blk.end());
      }
    } else if (b.type == BlockType::Switch) {
      for (auto v : g.flow_successors(u)) {
        if (!is_critical(u, v)) continue;
        auto blk = synth_block(block_label(g, v, next_label, created));
        const Label fresh = blk[0].as<operand::Label>().label;
        for (auto target : last.branch_targets())
          if (g.block_of(label_pos.at(target)) == v) retarget[b.last_real][target] = fresh;
        tail.insert(tail.end(), blk.begin(), blk.end());
      }
    }
  }
  if (before.empty() && tail.empty()) return g;

  std::vector<Insn> out;
  out.reserve(g.insns.size() + tail.size() + 2 * before.size() + created.size());
  for (std::size_t i = 0; i < g.insns.size(); ++i) {
    if (auto it = before.find(i); it != before.end()) out.insert(out.end(), it->second.begin(), it->second.end());
    if (auto it = created.find(i); it != created.end()) out.push_back(Insn::label(it->second));
    Insn insn = g.insns[i];
    if (auto it = retarget.find(i); it != retarget.end()) {
      auto swap = [&](Label& l) {
        if (auto r = it->second.find(l); r != it->second.end()) l = r->second;
      };
      if (auto* j = std::get_if<operand::Jump>(&insn.operand)) swap(j->target);
      if (auto* t = std::get_if<operand::TableSwitch>(&insn.operand)) {
        swap(t->default_target);
        for (auto& l : t->targets) swap(l);
      }
      if (auto* l = std::get_if<operand::LookupSwitch>(&insn.operand)) {
        swap(l->default_target);
        for (auto& [k, target] : l->pairs) swap(target);
      }
    }
    out.push_back(std::move(insn));
  }
  out.insert(out.end(), tail.begin(), tail.end());
  const std::size_t base = g.blocks.empty() ? 0 : g.blocks.front().index;
  return build_impl(g.method_name, g.descriptor, std::move(out), g.exception_table, next_label, std::move(synthetic),
                    base);
}

Cfg isolate_entry(const Cfg& g) {
  if (g.flow_predecessors(g.entry).empty()) return g;
  std::uint32_t next_label = g.next_label_id;
  std::map<std::size_t, Label> created;
  const Label target = block_label(g, g.entry, next_label, created);
  const Label l{next_label++};
  std::vector<Insn> out{Insn::label(l), Insn::jump(op::GOTO, target)};
  for (std::size_t i = 0; i < g.insns.size(); ++i) {
    if (auto it = created.find(i); it != created.end()) out.push_back(Insn::label(it->second));
    out.push_back(g.insns[i]);
  }
  auto synthetic = g.synthetic_labels;
  synthetic.push_back(l);
  const std::size_t base = g.blocks.empty() ? 0 : g.blocks.front().index;
  return build_impl(g.method_name, g.descriptor, std::move(out), g.exception_table, next_label, std::move(synthetic),
                    base);
}

std::size_t renumber_blocks(Cfg& g, std::size_t base) {
  std::size_t next = base;
  for (const bool synthetic : {false, true})
    for (auto& b : g.blocks) {
      if (b.synthetic != synthetic) continue;
      b.index = next++;
      b.id = g.method_name + "." + std::to_string(b.index);
    }
  return next;
}

}  // namespace cfweave::cfg
