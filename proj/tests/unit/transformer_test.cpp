#include <doctest.h>

#include <set>

#include "../support/corpus.hpp"
#include "../support/criteria.hpp"
#include "../support/fixtures.hpp"
#include "../support/fn_transformer.hpp"
#include "../support/jvm.hpp"
#include "cfweave/classfile/descriptor.hpp"
#include "cfweave/error.hpp"
#include "cfweave/transformers/builtins.hpp"

using namespace cfweave;
using namespace cfweave::classfile;
using testsupport::FnTransformer;
namespace tf = cfweave::transformers;

namespace {

std::vector<std::pair<std::string, Bytes>> inputs() {
  std::vector<std::pair<std::string, Bytes>> out;
  for (const auto& e : testsupport::corpus_classes()) out.emplace_back(e.name, e.data);
  for (auto& f : testsupport::all_fixtures()) out.emplace_back(f.this_class, emit_class(f));
  return out;
}

void require(const testsupport::Outcome& o) {
  INFO(o.detail);
  CHECK(o.pass);
}

}  // namespace

TEST_CASE("a transformer without advice leaves every class byte-identical") {
  FnTransformer none;
  none.before_insn = [](const tf::InstructionCtx&, tf::DynamicContext&) {};
  none.block_enter = [](const tf::BasicBlockCtx&, tf::DynamicContext&) {};
  tf::PipelineConfig config;
  const auto h = tf::make_hierarchy(config);
  for (const auto& [name, bytes] : inputs()) {
    CAPTURE(name);
    const auto r = tf::instrument_class(bytes, none, config, h);
    CHECK(r.bytes == bytes);
    CHECK_FALSE(r.report.modified);
    CHECK(r.report.actions() == 0);
    // Callbacks ran once per joinpoint of the two requested kinds.
    for (const auto& m : r.report.methods) {
      for (std::size_t k = 0; k < joinpoint::kKindCount; ++k) {
        const auto kind = static_cast<joinpoint::Kind>(k);
        const bool wanted = kind == joinpoint::Kind::BeforeInstruction || kind == joinpoint::Kind::OnBasicBlockEnter;
        CHECK(m.callbacks[k] == (wanted ? m.joinpoints[k] : 0));
      }
    }
  }
}

TEST_CASE("a scope matching nothing is an identity") {
  tf::PipelineConfig config;
  config.scope = joinpoint::Scope::parse("none.*");
  const auto h = tf::make_hierarchy(config);
  for (const auto& name : tf::builtin_names()) {
    for (const auto& [entry, bytes] : inputs()) {
      const auto r = tf::instrument_class(bytes, *tf::make_builtin(name), config, h);
      CHECK(r.bytes == bytes);
      CHECK_FALSE(r.report.in_scope);
    }
  }
}

TEST_CASE("every callback of an all-kinds transformer sees every joinpoint") {
  std::array<std::size_t, joinpoint::kKindCount> seen{};
  FnTransformer t;
  auto count = [&](joinpoint::Kind k) { ++seen[static_cast<std::size_t>(joinpoint::rank(k))]; };
  using K = joinpoint::Kind;
  t.enter = [&](auto&, auto&) { count(K::OnMethodEnter); };
  t.exit = [&](auto&, auto&) { count(K::OnMethodExit); };
  t.block_enter = [&](auto&, auto&) { count(K::OnBasicBlockEnter); };
  t.block_exit = [&](auto&, auto&) { count(K::OnBasicBlockExit); };
  t.true_enter = [&](auto&, auto&) { count(K::OnTrueBranchEnter); };
  t.false_enter = [&](auto&, auto&) { count(K::OnFalseBranchEnter); };
  t.before_insn = [&](auto&, auto&) { count(K::BeforeInstruction); };
  t.after_insn = [&](auto&, auto&) { count(K::AfterInstruction); };
  t.before_call = [&](auto&, auto&) { count(K::BeforeMethodCall); };
  t.after_call = [&](auto&, auto&) { count(K::AfterMethodCall); };
  tf::PipelineConfig config;
  const auto h = tf::make_hierarchy(config);
  std::array<std::size_t, joinpoint::kKindCount> reported{};
  for (const auto& [name, bytes] : inputs()) {
    const auto r = tf::instrument_class(bytes, t, config, h);
    for (const auto& m : r.report.methods)
      for (std::size_t k = 0; k < joinpoint::kKindCount; ++k) {
        CHECK(m.callbacks[k] == m.joinpoints[k]);
        reported[k] += m.callbacks[k];
      }
  }
  CHECK(seen == reported);
  for (const auto n : seen) CHECK(n > 0);
}

TEST_CASE("report lines") {
  auto cls = testsupport::micro_class();
  const auto bytes = emit_class(cls);
  tf::PipelineConfig config;
  config.scope = joinpoint::Scope::parse("fixtures.Micro.abs");
  tf::BasicBlockTracer tracer;
  const auto r = tf::instrument_class(bytes, tracer, config, tf::make_hierarchy(config));
  CHECK(tf::format_report(r.report) == "class fixtures.Micro modified methods=1 joinpoints=25 callbacks=6 actions=6\n");
  const auto verbose = testsupport::split_lines(tf::format_report(r.report, true));
  REQUIRE(verbose.size() == 2);
  CHECK(verbose[1] ==
        "  method abs(I)I modified actions=6 OnMethodEnter=0/1 OnBasicBlockEnter=3/3 OnTrueBranchEnter=0/1 "
        "OnFalseBranchEnter=0/1 BeforeInstruction=0/7 AfterInstruction=0/7 OnBasicBlockExit=3/3 OnMethodExit=0/2");
}

TEST_CASE("builtins are found by name") {
  for (const auto& name : tf::builtin_names()) {
    const auto t = tf::make_builtin(name);
    REQUIRE(t != nullptr);
    CHECK(t->name() == name);
  }
  CHECK(tf::make_builtin("no-such-transformer") == nullptr);
  CHECK(tf::IteratorMonitor().runtime_classes().front().first == "IteratorMonitor");
  CHECK(tf::TestInversionDetector().runtime_classes().front().first == "InversionReporter");
}

TEST_CASE("weave errors name every failing method") {
  FnTransformer t;
  t.enter = [](const tf::MethodCtx&, tf::DynamicContext& dc) { dc.insert({Insn::simple(op::POP)}); };
  auto cls = testsupport::micro_class();
  const auto bytes = emit_class(cls);
  tf::PipelineConfig config;
  config.scope = joinpoint::Scope::parse("fixtures.Micro.abs, fixtures.Micro.loop");
  try {
    tf::instrument_class(bytes, t, config, tf::make_hierarchy(config));
    FAIL("expected WeaveError");
  } catch (const WeaveError& e) {
    const std::string what = e.what();
    CHECK(e.method() == "fixtures.Micro.abs(I)I");
    CHECK(what.find("2 method(s) failed") != std::string::npos);
    CHECK(what.find("fixtures.Micro.loop(I)I") != std::string::npos);
  }
}

TEST_CASE("corpus classes woven by each builtin pass the verifier") {
  if (!testsupport::find_java()) {
    MESSAGE("java not found, skipped");
    return;
  }
  auto loader = testsupport::loader_class();
  const auto loader_bytes = emit_class(loader);
  std::vector<std::string> names;
  std::vector<std::pair<std::string, Bytes>> original;
  for (const auto& e : testsupport::corpus_classes()) {
    const auto internal = e.name.substr(0, e.name.size() - 6);
    names.push_back(dotted(internal));
    original.emplace_back(internal, e.data);
  }
  auto load = [&](std::vector<std::pair<std::string, Bytes>> classes) {
    classes.emplace_back(loader.this_class, loader_bytes);
    return testsupport::run_fixture(classes, "fixtures.Loader", names);
  };
  {
    // Negative control: a branch target without a stack map frame.
    auto broken = testsupport::make_class("fixtures/Broken");
    testsupport::CodeBuilder b;
    const auto l = b.label();
    b.op(op::ACONST_NULL).jump(op::IFNULL, l).mark(l).op(op::RETURN);
    testsupport::add_method(broken, acc::PUBLIC | acc::STATIC, "f", "()V", b.take()).code->stack_map.reset();
    const auto r = testsupport::run_fixture({{broken.this_class, emit_class(broken)}, {loader.this_class, loader_bytes}},
                                            "fixtures.Loader", {"fixtures.Broken"});
    CHECK(r.out == "verify fixtures.Broken\ndone\n");
  }
  const auto base = load(original);
  REQUIRE(base.exit_code == 0);
  CHECK(base.out.find("verify ") == std::string::npos);
  CHECK(base.out.ends_with("done\n"));
  tf::PipelineConfig config;
  const auto h = tf::make_hierarchy(config);
  for (const auto& name : tf::builtin_names()) {
    CAPTURE(name);
    auto t = tf::make_builtin(name);
    auto classes = t->runtime_classes();
    std::size_t modified = 0;
    for (const auto& [internal, bytes] : original) {
      const auto r = tf::instrument_class(bytes, *t, config, h);
      modified += r.report.modified ? 1 : 0;
      classes.emplace_back(internal, r.bytes);
    }
    const auto woven = load(classes);
    CHECK(woven.exit_code == 0);
    CHECK(woven.out.find("verify ") == std::string::npos);
    // Initialization failures unrelated to verification are the same as
    // without instrumentation.
    std::set<std::string> base_other, woven_other;
    for (const auto& l : testsupport::split_lines(base.out))
      if (l.starts_with("other ")) base_other.insert(l);
    for (const auto& l : testsupport::split_lines(woven.out))
      if (l.starts_with("other ")) woven_other.insert(l);
    CHECK(base_other == woven_other);
    MESSAGE(name << ": " << modified << " corpus classes modified and loaded");
  }
}

TEST_CASE("end-to-end runs of the built-in transformers") {
  if (!testsupport::find_java()) {
    MESSAGE("java not found, skipped");
    return;
  }
  SUBCASE("woven fixtures keep their output") { require(testsupport::verifier_acceptance()); }
  SUBCASE("block traces follow the graph walk") { require(testsupport::block_traces()); }
  SUBCASE("iterator monitor counts") { require(testsupport::iterator_counts()); }
  SUBCASE("test inversions") { require(testsupport::aes_inversions()); }
  SUBCASE("event count grows with the input") { require(testsupport::aes_event_scaling()); }
}

TEST_CASE("detector size overhead") { require(testsupport::aes_size_overhead()); }

TEST_CASE("fault injection touches only the chosen jump") {
  tf::FaultInjector injector("mul", 1);
  const auto program = testsupport::woven_program(testsupport::aes_class(), injector);
  CHECK(injector.injected() == 1);
  CHECK(program.size() == 2);
}
