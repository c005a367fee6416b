#include <doctest.h>

#include <algorithm>
#include <set>

#include "../support/corpus.hpp"
#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"
#include "cfweave/analysis/frames.hpp"
#include "cfweave/error.hpp"

using namespace cfweave;
using namespace cfweave::analysis;
using namespace cfweave::classfile;

namespace {

struct Corpus {
  std::vector<ClassModel> classes;
  ClassHierarchy hierarchy;
};

const Corpus& corpus() {
  static const Corpus c = [] {
    Corpus out;
    for (const auto& e : testsupport::corpus_classes()) out.classes.push_back(parse_class(e.data));
    for (const auto& m : out.classes) out.hierarchy.add_class(m);
    return out;
  }();
  return c;
}

std::size_t label_position(const CodeBody& code, Label l) {
  auto i = code.find_label(l);
  while (!code.insns[i].is_real()) ++i;
  return i;
}

}  // namespace

TEST_CASE("dataflow properties on every corpus method") {
  const auto& c = corpus();
  std::size_t methods = 0, insns = 0;
  for (const auto& cls : c.classes) {
    const Analyzer an(cls.this_class, c.hierarchy);
    for (const auto& m : cls.methods) {
      if (!m.code) continue;
      CAPTURE(cls.this_class + "." + m.name + m.descriptor);
      ++methods;
      const auto& code = *m.code;
      const auto frames = an.basic_frames(m);
      REQUIRE(frames.size() == code.insns.size());
      for (std::size_t i = 0; i < code.insns.size(); ++i) {
        if (!code.insns[i].is_real() || !frames[i]) continue;
        ++insns;
        const Frame& in = *frames[i];
        CHECK(in.locals.size() >= code.max_locals);
        const auto [pops, pushes] = testsupport::stack_effect(code.insns[i]);
        REQUIRE(in.stack_slots() >= pops);
        const Frame out = an.execute(code, i, in);
        CHECK(out.stack_slots() == in.stack_slots() - pops + pushes);
        for (const auto& s : Analyzer::successors(code, i)) {
          REQUIRE(frames[s.insn].has_value());
          const Frame incoming = s.handler ? Analyzer::handler_frame(in, s.catch_type) : out;
          if (s.handler)
            CHECK(frames[s.insn]->stack_slots() == 1);
          else
            CHECK(frames[s.insn]->stack_slots() == in.stack_slots() - pops + pushes);
          // Fixpoint: joining any incoming state changes nothing.
          CHECK(an.merge(*frames[s.insn], incoming) == *frames[s.insn]);
        }
      }
      const auto mx = an.recompute_max(m, frames);
      CHECK(mx.max_stack <= code.max_stack);
      CHECK(mx.max_locals <= code.max_locals);
    }
  }
  MESSAGE("methods: " << methods << ", reachable instructions: " << insns);
  CHECK(methods >= 50);
}

TEST_CASE("regenerated stack maps cover every frame position javac needed") {
  const auto& c = corpus();
  std::size_t compared = 0, same_kind = 0, total = 0;
  for (const auto& cls : c.classes) {
    const Analyzer an(cls.this_class, c.hierarchy);
    for (const auto& m : cls.methods) {
      if (!m.code || !m.code->stack_map) continue;
      CAPTURE(cls.this_class + "." + m.name + m.descriptor);
      const auto& code = *m.code;
      const auto frames = an.basic_frames(m);
      const auto mine = an.compute_stack_map(m, frames);
      std::vector<std::size_t> theirs_at, mine_at;
      for (const auto& f : *code.stack_map) theirs_at.push_back(label_position(code, f.label));
      for (const auto& f : mine) mine_at.push_back(label_position(code, f.label));
      // Older javac releases also put a frame at the start of a try range.
      std::set<std::size_t> try_starts;
      for (const auto& h : code.exception_table) try_starts.insert(label_position(code, h.start));
      CHECK(std::includes(theirs_at.begin(), theirs_at.end(), mine_at.begin(), mine_at.end()));
      for (auto p : theirs_at)
        if (std::find(mine_at.begin(), mine_at.end(), p) == mine_at.end()) CHECK(try_starts.count(p) == 1);
      ++compared;
      for (std::size_t k = 0; k < std::min(mine.size(), code.stack_map->size()); ++k) {
        ++total;
        if (mine[k].type == (*code.stack_map)[k].type) ++same_kind;
      }
    }
  }
  MESSAGE("methods with javac frames: " << compared << ", frames with the same compressed kind: " << same_kind << "/"
                                        << total);
  CHECK(compared > 0);
}

TEST_CASE("abs frames") {
  const auto cls = testsupport::abs_only_class();
  const ClassHierarchy h;
  const Analyzer an(cls.this_class, h);
  const auto& m = cls.methods.at(0);
  const auto frames = an.basic_frames(m);
  const auto& code = *m.code;
  for (std::size_t i = 0; i < code.insns.size(); ++i) {
    REQUIRE(frames[i].has_value());
    CHECK(frames[i]->locals == std::vector<VType>{VType::integer()});
  }
  std::size_t ifge = 0;
  while (code.insns[ifge].opcode != op::IFGE || !code.insns[ifge].is_real()) ++ifge;
  CHECK(frames[ifge]->stack == std::vector<VType>{VType::integer()});
  const auto mx = an.recompute_max(m);
  CHECK(mx == MaxValues{1, 1});
  const auto map = an.compute_stack_map(m, frames);
  REQUIRE(map.size() == 1);
  CHECK(map[0].type == StackMapFrame::Type::Same);
}

TEST_CASE("source frames record the producing instruction") {
  // x = p ? 1 : 2 through two istores, then dup
  testsupport::CodeBuilder b;
  const auto other = b.label(), join = b.label();
  b.var(op::ILOAD, 0).jump(op::IFEQ, other);       // 0..2 with labels
  b.iconst(1).var(op::ISTORE, 1).jump(op::GOTO, join);
  b.mark(other).iconst(2).var(op::ISTORE, 1);
  b.mark(join).var(op::ILOAD, 1).op(op::DUP).op(op::IADD).op(op::IRETURN);
  auto cls = testsupport::make_class("fixtures/Src");
  const auto& m = testsupport::add_method(cls, acc::STATIC, "f", "(I)I", b.take());
  const ClassHierarchy h;
  const Analyzer an(cls.this_class, h);
  const auto src = an.source_frames(m);
  const auto& insns = m.code->insns;
  std::vector<std::size_t> stores;
  std::size_t load = 0, dup = 0, add = 0;
  for (std::size_t i = 0; i < insns.size(); ++i) {
    if (insns[i].opcode == op::ISTORE) stores.push_back(i);
    if (insns[i].opcode == op::ILOAD && insns[i].as<operand::LocalVar>().slot == 1) load = i;
    if (insns[i].opcode == op::DUP) dup = i;
    if (insns[i].opcode == op::IADD) add = i;
  }
  REQUIRE(stores.size() == 2);
  CHECK(src[load]->locals[1] == stores);
  CHECK(src[load]->locals[0].empty());  // parameter: no producer
  CHECK(src[dup]->stack == std::vector<std::vector<std::size_t>>{{load}});
  CHECK(src[add]->stack == std::vector<std::vector<std::size_t>>{{dup}, {dup}});
}

TEST_CASE("reference merges use the nearest common superclass") {
  ClassHierarchy h;
  h.add("app/Animal", {"java/lang/Object", false});
  h.add("app/Dog", {"app/Animal", false});
  h.add("app/Cat", {"app/Animal", false});
  const Analyzer an("app/Main", h);
  CHECK(an.merge(VType::ref("app/Dog"), VType::ref("app/Cat")) == VType::ref("app/Animal"));
  CHECK(an.merge(VType::ref("app/Dog"), VType::null()) == VType::ref("app/Dog"));
  CHECK(an.merge(VType::ref("java/lang/Integer"), VType::ref("java/lang/Long")) == VType::ref("java/lang/Number"));
  CHECK(an.merge(VType::ref("java/util/ArrayList"), VType::ref("java/util/List")) == VType::ref("java/lang/Object"));
  CHECK(an.merge(VType::ref("[Lapp/Dog;"), VType::ref("[Lapp/Cat;")) == VType::ref("[Lapp/Animal;"));
  CHECK(an.merge(VType::ref("[I"), VType::ref("[F")) == VType::ref("java/lang/Object"));
  CHECK(an.merge(VType::integer(), VType::float_()) == VType::top());
  CHECK(an.merge(VType::ref("app/Dog"), VType::ref("lib/Unknown")) == VType::ref("java/lang/Object"));
  const Analyzer strict("app/Main", h, true);
  CHECK_THROWS_AS(strict.merge(VType::ref("app/Dog"), VType::ref("lib/Unknown")), ResolutionFailure);
  CHECK(h.common_superclass("app/Dog", "lib/Unknown") == std::nullopt);
}

TEST_CASE("malformed bodies are type conflicts") {
  const ClassHierarchy h;
  auto cls = testsupport::make_class("fixtures/Bad");
  const Analyzer an(cls.this_class, h);

  MethodModel underflow;
  underflow.access.bits = acc::STATIC;
  underflow.name = "f";
  underflow.descriptor = "()V";
  testsupport::CodeBuilder b1;
  b1.op(op::POP).op(op::RETURN);
  underflow.code = b1.take();
  CHECK_THROWS_AS(an.basic_frames(underflow), TypeConflict);

  MethodModel mismatch = underflow;
  testsupport::CodeBuilder b2;
  const auto join = b2.label();
  b2.var(op::ILOAD, 0).jump(op::IFEQ, join).iconst(1).mark(join).op(op::RETURN);
  mismatch.descriptor = "(I)V";
  mismatch.code = b2.take();
  CHECK_THROWS_AS(an.basic_frames(mismatch), TypeConflict);

  MethodModel wrong = underflow;
  testsupport::CodeBuilder b3;
  b3.op(op::FCONST_0).op(op::INEG).op(op::POP).op(op::RETURN);
  wrong.code = b3.take();
  CHECK_THROWS_AS(an.basic_frames(wrong), TypeConflict);
}

TEST_CASE("unreachable code is removed together with empty handler ranges") {
  testsupport::CodeBuilder b;
  const auto s = b.label(), e = b.label(), h = b.label();
  b.op(op::RETURN);
  b.mark(s).op(op::ACONST_NULL).op(op::ATHROW).mark(e);
  b.mark(h).op(op::ATHROW);
  b.handler(s, e, h, std::nullopt);
  MethodModel m;
  m.access.bits = acc::STATIC;
  m.name = "f";
  m.descriptor = "()V";
  m.code = b.take();
  const ClassHierarchy hier;
  const Analyzer an("fixtures/Dead", hier);
  auto frames = an.basic_frames(m);
  CHECK(remove_unreachable(*m.code, frames) == 3);
  CHECK(m.code->exception_table.empty());
  frames = an.basic_frames(m);
  std::size_t real = 0;
  for (const auto& i : m.code->insns) real += i.is_real();
  CHECK(real == 1);
}

TEST_CASE("constructor frames track uninitialized values") {
  testsupport::CodeBuilder b;
  b.var(op::ALOAD, 0).invoke(op::INVOKESPECIAL, "java/lang/Object", "<init>", "()V");
  b.type(op::NEW, "java/lang/StringBuilder").op(op::DUP);
  b.invoke(op::INVOKESPECIAL, "java/lang/StringBuilder", "<init>", "()V").op(op::POP).op(op::RETURN);
  auto cls = testsupport::make_class("fixtures/Ctor");
  const auto& m = testsupport::add_method(cls, acc::PUBLIC, "<init>", "()V", b.take());
  const ClassHierarchy h;
  const Analyzer an(cls.this_class, h);
  const auto frames = an.basic_frames(m);
  const auto& insns = m.code->insns;
  CHECK(frames[0]->locals[0].kind() == VType::Kind::UninitializedThis);
  for (std::size_t i = 0; i < insns.size(); ++i) {
    if (insns[i].opcode == op::POP && insns[i].is_real()) {
      CHECK(frames[i]->locals[0] == VType::ref("fixtures/Ctor"));
      CHECK(frames[i]->stack == std::vector<VType>{VType::ref("java/lang/StringBuilder")});
    }
    if (insns[i].opcode == op::DUP) CHECK(frames[i]->stack.at(0).kind() == VType::Kind::Uninitialized);
  }
}

TEST_CASE("labels are added in front of bare allocations") {
  CodeBody code;
  code.insns.push_back(Insn::type(op::NEW, "java/lang/Object"));
  code.insns.push_back(Insn::simple(op::POP));
  code.insns.push_back(Insn::simple(op::RETURN));
  ensure_new_labels(code);
  REQUIRE(code.insns.size() == 4);
  CHECK(code.insns[0].is_label());
  ensure_new_labels(code);
  CHECK(code.insns.size() == 4);
}
