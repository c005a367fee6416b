#include "fixtures.hpp"

namespace testsupport {

namespace {

// int abs(int x) { if (x < 0) return -x; return x; }
CodeBody abs_body() {
  CodeBuilder b;
  const auto positive = b.label();
  b.line(3).var(op::ILOAD, 0).jump(op::IFGE, positive);
  b.line(4).var(op::ILOAD, 0).op(op::INEG).op(op::IRETURN);
  b.mark(positive).line(5).var(op::ILOAD, 0).op(op::IRETURN);
  return b.take();
}

// int loop(int n) { int s = 0; for (int i = 0; i < n; i++) s += i; return s; }
CodeBody loop_body() {
  CodeBuilder b;
  const auto cond = b.label(), body = b.label();
  b.iconst(0).var(op::ISTORE, 1).iconst(0).var(op::ISTORE, 2).jump(op::GOTO, cond);
  b.mark(body).var(op::ILOAD, 1).var(op::ILOAD, 2).op(op::IADD).var(op::ISTORE, 1).iinc(2, 1);
  b.mark(cond).var(op::ILOAD, 2).var(op::ILOAD, 0).jump(op::IF_ICMPLT, body);
  b.var(op::ILOAD, 1).op(op::IRETURN);
  return b.take();
}

// int diamond(int x) { int r; if (x > 0) r = 1; else r = 2; return r + 1; }
CodeBody diamond_body() {
  CodeBuilder b;
  const auto other = b.label(), join = b.label();
  b.var(op::ILOAD, 0).jump(op::IFLE, other);
  b.iconst(1).var(op::ISTORE, 1).jump(op::GOTO, join);
  b.mark(other).iconst(2).var(op::ISTORE, 1);
  b.mark(join).var(op::ILOAD, 1).iconst(1).op(op::IADD).op(op::IRETURN);
  return b.take();
}

void print_int_call(CodeBuilder& b, const std::string& owner, const char* method, int arg) {
  b.field(op::GETSTATIC, "java/lang/System", "out", "Ljava/io/PrintStream;");
  b.iconst(arg).invoke(op::INVOKESTATIC, owner, method, "(I)I");
  b.invoke(op::INVOKEVIRTUAL, "java/io/PrintStream", "println", "(I)V");
}

}  // namespace

ClassModel micro_class() {
  auto cls = make_class("fixtures/Micro");
  add_default_constructor(cls);
  add_method(cls, acc::PUBLIC | acc::STATIC, "abs", "(I)I", abs_body());
  add_method(cls, acc::PUBLIC | acc::STATIC, "loop", "(I)I", loop_body());
  add_method(cls, acc::PUBLIC | acc::STATIC, "diamond", "(I)I", diamond_body());
  CodeBuilder b;
  print_int_call(b, cls.this_class, "abs", -5);
  print_int_call(b, cls.this_class, "abs", 7);
  print_int_call(b, cls.this_class, "loop", 3);
  print_int_call(b, cls.this_class, "diamond", 4);
  print_int_call(b, cls.this_class, "diamond", -4);
  b.op(op::RETURN);
  add_method(cls, acc::PUBLIC | acc::STATIC, "main", "([Ljava/lang/String;)V", b.take());
  return cls;
}

ClassModel abs_only_class() {
  auto cls = make_class("fixtures/Abs");
  add_method(cls, acc::PUBLIC | acc::STATIC, "abs", "(I)I", abs_body());
  return cls;
}

}  // namespace testsupport
