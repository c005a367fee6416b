#include <doctest.h>

#include <set>

#include "../support/fixtures.hpp"
#include "../support/fn_transformer.hpp"
#include "../support/jvm.hpp"
#include "cfweave/classfile/descriptor.hpp"
#include "cfweave/error.hpp"
#include "cfweave/weaver/weaver.hpp"

using namespace cfweave;
using namespace cfweave::classfile;
using testsupport::FnTransformer;
namespace tf = cfweave::transformers;
namespace wv = cfweave::weaver;

namespace {

Bytes weave(ClassModel cls, tf::Transformer& t, const std::string& scope) {
  tf::PipelineConfig config;
  config.scope = joinpoint::Scope::parse(scope);
  const auto bytes = emit_class(cls);
  return tf::instrument_class(bytes, t, config, tf::make_hierarchy(config)).bytes;
}

std::string run_woven(const ClassModel& cls, const Bytes& bytes,
                      std::vector<std::pair<std::string, Bytes>> extra = {}) {
  extra.emplace_back(cls.this_class, bytes);
  const auto r = testsupport::run_fixture(extra, dotted(cls.this_class));
  CHECK(r.err == "");
  CHECK(r.exit_code == 0);
  return r.out;
}

bool have_java() {
  if (testsupport::find_java()) return true;
  MESSAGE("java not found, skipped");
  return false;
}

}  // namespace

TEST_CASE("stack values below the top are spilled and printed") {
  if (!have_java()) return;
  FnTransformer t;
  t.before_insn = [](const tf::InstructionCtx& ic, tf::DynamicContext& dc) {
    if (ic.opcode != op::IADD) return;
    dc.println(dc.get_stack_value(1));
    dc.println(dc.get_stack_value(0));
  };
  const auto cls = testsupport::micro_class();
  // s, i before each s += i of loop(3)
  CHECK(run_woven(cls, weave(cls, t, "fixtures.Micro.loop")) == "5\n7\n0\n0\n0\n1\n1\n2\n3\n2\n3\n");
}

TEST_CASE("receiver, arguments and result around calls") {
  if (!have_java()) return;
  FnTransformer t;
  t.before_call = [](const tf::MethodCallCtx& mc, tf::DynamicContext& dc) {
    if (mc.method_name == "println") dc.print_hash(dc.get_method_receiver());
  };
  t.after_call = [](const tf::MethodCallCtx& mc, tf::DynamicContext& dc) {
    if (mc.method_name == "println") {
      dc.print_hash(dc.get_method_receiver());
      dc.println(dc.get_method_arg(1));
    } else {
      dc.println(dc.get_method_arg(1));
      dc.println(dc.get_method_result());
    }
  };
  const auto cls = testsupport::micro_class();
  const auto lines = testsupport::split_lines(run_woven(cls, weave(cls, t, "fixtures.Micro.main")));
  REQUIRE(lines.size() == 30);
  const std::vector<std::pair<std::string, std::string>> calls = {
      {"-5", "5"}, {"7", "7"}, {"3", "3"}, {"4", "2"}, {"-4", "3"}};
  std::set<std::string> hashes;
  for (std::size_t k = 0; k < calls.size(); ++k) {
    const auto* l = &lines[6 * k];
    CHECK(l[0] == calls[k].first);
    CHECK(l[1] == calls[k].second);
    CHECK(l[3] == calls[k].second);
    CHECK(l[5] == calls[k].second);
    hashes.insert(l[2]);
    hashes.insert(l[4]);
  }
  // Every receiver is the same System.out.
  CHECK(hashes.size() == 1);
}

TEST_CASE("this is null in static methods, static fields and synthetic locals") {
  if (!have_java()) return;
  FnTransformer t;
  std::optional<wv::SyntheticLocal> counter, big, real, flag;
  t.enter = [&](const tf::MethodCtx&, tf::DynamicContext& dc) {
    dc.println(dc.get_this());
    counter = dc.add_local_variable(std::int32_t{7});
    big = dc.add_local_variable(std::int64_t{123456789012});
    real = dc.add_local_variable(1.5);
    flag = dc.add_local_variable(true);
    CHECK_THROWS_AS(dc.update_local_variable(*counter, std::int64_t{1}), CategoryMismatch);
    CHECK_THROWS_AS(dc.update_local_variable(*flag, 2.0), CategoryMismatch);
  };
  t.before_insn = [&](const tf::InstructionCtx& ic, tf::DynamicContext& dc) {
    if (ic.opcode == op::IADD) dc.update_local_variable(*counter, std::int32_t{9});
    CHECK_THROWS_AS(dc.add_local_variable(std::int32_t{0}), RegistrationError);
  };
  t.exit = [&](const tf::MethodCtx&, tf::DynamicContext& dc) {
    dc.println(dc.get_synthetic_local(*counter));
    dc.println(dc.get_synthetic_local(*big));
    dc.println(dc.get_synthetic_local(*real));
    dc.println(dc.get_synthetic_local(*flag));
    dc.print_hash(dc.get_static_field("java/lang/System", "out", "Ljava/io/PrintStream;"));
  };
  const auto cls = testsupport::micro_class();
  const auto lines = testsupport::split_lines(run_woven(cls, weave(cls, t, "fixtures.Micro.loop")));
  REQUIRE(lines.size() == 11);
  CHECK(lines[2] == "null");
  CHECK(lines[3] == "9");
  CHECK(lines[4] == "123456789012");
  CHECK(lines[5] == "1.5");
  CHECK(lines[6] == "true");
  CHECK(lines[8] == "3");
}

TEST_CASE("static invocation descriptors and parameter checks") {
  wv::StaticInvocation call("fixtures/Sink", "take");
  call.add_param(std::int32_t{1}).add_param("s").add_param(std::int64_t{2}).add_param(true).add_param(2.5f);
  call.add_param(std::any(3.0));
  CHECK(call.descriptor() == "(ILjava/lang/String;JZFD)V");
  CHECK_THROWS_AS(call.add_param(std::any(std::vector<int>{})), RegistrationError);
  CHECK_THROWS_AS(call.add_param(std::any()), RegistrationError);
}

TEST_CASE("invoke passes literals and dynamic values to a static method") {
  if (!have_java()) return;
  auto sink = testsupport::make_class("fixtures/Sink");
  {
    testsupport::CodeBuilder b;
    b.field(op::GETSTATIC, "java/lang/System", "out", "Ljava/io/PrintStream;").var(op::ALOAD, 0);
    b.invoke(op::INVOKEVIRTUAL, "java/io/PrintStream", "print", "(Ljava/lang/String;)V");
    b.field(op::GETSTATIC, "java/lang/System", "out", "Ljava/io/PrintStream;").var(op::ILOAD, 1);
    b.invoke(op::INVOKEVIRTUAL, "java/io/PrintStream", "println", "(I)V").op(op::RETURN);
    testsupport::add_method(sink, acc::PUBLIC | acc::STATIC, "take", "(Ljava/lang/String;I)V", b.take());
  }
  FnTransformer t;
  t.enter = [](const tf::MethodCtx&, tf::DynamicContext& dc) {
    wv::StaticInvocation call("fixtures/Sink", "take");
    call.add_param("arg=").add_param(dc.get_method_arg(1));
    dc.invoke(call);
  };
  const auto cls = testsupport::micro_class();
  const auto out = run_woven(cls, weave(cls, t, "fixtures.Micro.abs"), {{sink.this_class, emit_class(sink)}});
  CHECK(out == "arg=-5\n5\narg=7\n7\n3\n2\n3\n");
}

TEST_CASE("values are bound to the joinpoint that created them") {
  FnTransformer t;
  std::optional<wv::DynamicValue> kept;
  bool threw = false;
  t.enter = [&](const tf::MethodCtx&, tf::DynamicContext& dc) { kept = dc.get_method_arg(1); };
  t.exit = [&](const tf::MethodCtx&, tf::DynamicContext& dc) {
    try {
      dc.println(*kept);
    } catch (const RegistrationError&) {
      threw = true;
    }
  };
  weave(testsupport::abs_only_class(), t, "");
  CHECK(threw);
}

TEST_CASE("unavailable values") {
  FnTransformer t;
  std::size_t checked = 0;
  t.before_insn = [&](const tf::InstructionCtx& ic, tf::DynamicContext& dc) {
    if (ic.index != 0 && ic.opcode != op::INVOKESPECIAL) return;
    CHECK_THROWS_AS(dc.get_stack_value(5), UnavailableValue);
    CHECK_THROWS_AS(dc.get_local_variable(40), UnavailableValue);
    CHECK_THROWS_AS(dc.get_method_result(), UnavailableValue);
    ++checked;
  };
  auto cls = testsupport::micro_class();
  weave(cls, t, "fixtures.Micro.<init>");
  CHECK(checked >= 1);
}

TEST_CASE("raw code that breaks the stack is reported with the method") {
  FnTransformer t;
  t.enter = [](const tf::MethodCtx&, tf::DynamicContext& dc) { dc.insert({Insn::simple(op::POP)}); };
  try {
    weave(testsupport::abs_only_class(), t, "");
    FAIL("expected WeaveError");
  } catch (const WeaveError& e) {
    CHECK(e.method() == "fixtures.Abs.abs(I)I");
  }
}

TEST_CASE("raw code with its own labels and locals") {
  if (!have_java()) return;
  // Before abs returns, clamp the result to at most 6 with inserted code.
  FnTransformer t;
  t.before_insn = [](const tf::InstructionCtx& ic, tf::DynamicContext& dc) {
    if (ic.opcode != op::IRETURN) return;
    const auto slot = dc.new_local();
    const auto keep = dc.new_label();
    dc.insert({Insn::var(op::ISTORE, slot), Insn::var(op::ILOAD, slot), push_int(6), Insn::jump(op::IF_ICMPLE, keep),
               push_int(6), Insn::var(op::ISTORE, slot), Insn::label(keep), Insn::var(op::ILOAD, slot)});
  };
  const auto cls = testsupport::micro_class();
  CHECK(run_woven(cls, weave(cls, t, "fixtures.Micro.abs")) == "5\n6\n3\n2\n3\n");
}
