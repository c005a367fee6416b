#include <array>
#include <functional>

#include "fixtures.hpp"

namespace testsupport {

namespace {

constexpr const char* kOut = "java/lang/System";
constexpr const char* kPrintStream = "java/io/PrintStream";

void out(CodeBuilder& b) { b.field(op::GETSTATIC, kOut, "out", "Ljava/io/PrintStream;"); }

void println_str(CodeBuilder& b, const std::string& s) {
  out(b);
  b.str(s).invoke(op::INVOKEVIRTUAL, kPrintStream, "println", "(Ljava/lang/String;)V");
}

// for (slot = 0; slot < bound; slot++) body
template <class Body>
void count_loop(CodeBuilder& b, std::uint16_t slot, std::int32_t bound, Body body) {
  const auto cond = b.label(), top = b.label();
  b.iconst(0).var(op::ISTORE, slot).jump(op::GOTO, cond);
  b.mark(top);
  body();
  b.iinc(slot, 1);
  b.mark(cond).var(op::ILOAD, slot).iconst(bound).jump(op::IF_ICMPLT, top);
}

}  // namespace

// ---- placement probes ----

ClassModel probe_class() {
  auto cls = make_class("fixtures/Probe");
  const std::string self = cls.this_class;
  add_default_constructor(cls);
  for (int i = 1; i <= 4; ++i) {
    CodeBuilder b;
    println_str(b, "hit" + std::to_string(i));
    b.op(op::RETURN);
    add_method(cls, acc::PUBLIC | acc::STATIC, "hit" + std::to_string(i), "()V", b.take());
  }
  auto hit = [&](CodeBuilder& b, int i) { b.invoke(op::INVOKESTATIC, self, "hit" + std::to_string(i), "()V"); };
  {
    CodeBuilder b;
    const auto l = b.label();
    b.var(op::ILOAD, 0).jump(op::IFEQ, l);
    hit(b, 1);
    hit(b, 2);
    b.mark(l);
    hit(b, 3);
    b.op(op::RETURN);
    add_method(cls, acc::PUBLIC | acc::STATIC, "branch", "(I)V", b.take());
  }
  {
    CodeBuilder b;
    const auto other = b.label(), join = b.label();
    b.var(op::ILOAD, 0).jump(op::IFLE, other);
    hit(b, 1);
    b.jump(op::GOTO, join);
    b.mark(other);
    hit(b, 2);
    b.mark(join);
    hit(b, 3);
    b.op(op::RETURN);
    add_method(cls, acc::PUBLIC | acc::STATIC, "jumper", "(I)V", b.take());
  }
  {
    CodeBuilder b;
    hit(b, 1);
    b.type(op::NEW, "java/lang/RuntimeException").op(op::DUP);
    b.invoke(op::INVOKESPECIAL, "java/lang/RuntimeException", "<init>", "()V").op(op::ATHROW);
    add_method(cls, acc::PUBLIC | acc::STATIC, "thrower", "()V", b.take());
  }
  {
    CodeBuilder b;
    b.op(op::RETURN);
    add_method(cls, acc::PUBLIC | acc::STATIC, "empty", "()V", b.take());
  }
  {
    CodeBuilder b;
    for (const char* m : {"branch", "jumper"}) {
      for (int arg : {1, 0}) {
        println_str(b, std::string("-- ") + m + " " + std::to_string(arg));
        b.iconst(arg).invoke(op::INVOKESTATIC, self, m, "(I)V");
      }
    }
    println_str(b, "-- empty");
    b.invoke(op::INVOKESTATIC, self, "empty", "()V");
    println_str(b, "-- thrower");
    const auto start = b.label(), end = b.label(), handler = b.label(), done = b.label();
    b.mark(start).invoke(op::INVOKESTATIC, self, "thrower", "()V");
    b.mark(end).jump(op::GOTO, done);
    b.mark(handler).var(op::ASTORE, 1);
    hit(b, 4);
    b.mark(done).op(op::RETURN);
    b.handler(start, end, handler, "java/lang/RuntimeException");
    add_method(cls, acc::PUBLIC | acc::STATIC, "main", "([Ljava/lang/String;)V", b.take());
  }
  return cls;
}

// ---- iterator programs ----

namespace {

// list = new ArrayList(); list.add("a"); list.add("b"); list.add("c");
// it = list.iterator(); slots: list 1, it 2.
void make_iterator(CodeBuilder& b) {
  b.type(op::NEW, "java/util/ArrayList").op(op::DUP);
  b.invoke(op::INVOKESPECIAL, "java/util/ArrayList", "<init>", "()V").var(op::ASTORE, 1);
  for (const char* s : {"a", "b", "c"}) {
    b.var(op::ALOAD, 1).str(s).invoke(op::INVOKEINTERFACE, "java/util/List", "add", "(Ljava/lang/Object;)Z");
    b.op(op::POP);
  }
  b.var(op::ALOAD, 1).invoke(op::INVOKEINTERFACE, "java/util/List", "iterator", "()Ljava/util/Iterator;");
  b.var(op::ASTORE, 2);
}

void print_next(CodeBuilder& b) {
  out(b);
  b.var(op::ALOAD, 2).invoke(op::INVOKEINTERFACE, "java/util/Iterator", "next", "()Ljava/lang/Object;");
  b.invoke(op::INVOKEVIRTUAL, kPrintStream, "println", "(Ljava/lang/Object;)V");
}

void has_next(CodeBuilder& b) {
  b.var(op::ALOAD, 2).invoke(op::INVOKEINTERFACE, "java/util/Iterator", "hasNext", "()Z");
}

}  // namespace

ClassModel iterator_safe_class() {
  auto cls = make_class("fixtures/IterSafe");
  add_default_constructor(cls);
  CodeBuilder b;
  make_iterator(b);
  // for (i = 0; i < 3; i++) if (it.hasNext()) System.out.println(it.next());
  count_loop(b, 3, 3, [&] {
    const auto skip = b.label();
    has_next(b);
    b.jump(op::IFEQ, skip);
    print_next(b);
    b.mark(skip);
  });
  b.op(op::RETURN);
  add_method(cls, acc::PUBLIC | acc::STATIC, "main", "([Ljava/lang/String;)V", b.take());
  return cls;
}

ClassModel iterator_violation_class() {
  auto cls = make_class("fixtures/IterBad");
  add_default_constructor(cls);
  CodeBuilder b;
  make_iterator(b);
  const auto end = b.label();
  has_next(b);
  b.jump(op::IFEQ, end);
  print_next(b);
  print_next(b);
  b.mark(end).op(op::RETURN);
  add_method(cls, acc::PUBLIC | acc::STATIC, "main", "([Ljava/lang/String;)V", b.take());
  return cls;
}

// ---- AES-128 ----

namespace {

constexpr std::int32_t kIntArray = 10;  // newarray operand

std::array<int, 256> make_sbox() {
  std::array<int, 256> s{};
  int p = 1, q = 1;
  do {
    p = p ^ ((p << 1) & 0xff) ^ ((p & 0x80) ? 0x1b : 0);
    q ^= q << 1;
    q ^= q << 2;
    q ^= q << 4;
    q &= 0xff;
    if (q & 0x80) q ^= 0x09;
    const int rot = q ^ ((q << 1) | (q >> 7)) ^ ((q << 2) | (q >> 6)) ^ ((q << 3) | (q >> 5)) ^ ((q << 4) | (q >> 4));
    s[p] = (rot ^ 0x63) & 0xff;
  } while (p != 1);
  s[0] = 0x63;
  return s;
}

void static_table(CodeBuilder& b, const std::string& owner, const char* name, const std::vector<int>& values) {
  b.iconst(static_cast<std::int32_t>(values.size())).int_op(op::NEWARRAY, kIntArray);
  for (std::size_t i = 0; i < values.size(); ++i)
    b.op(op::DUP).iconst(static_cast<std::int32_t>(i)).iconst(values[i]).op(op::IASTORE);
  b.field(op::PUTSTATIC, owner, name, "[I");
}

}  // namespace

ClassModel aes_class() {
  auto cls = make_class("fixtures/Aes");
  const std::string self = cls.this_class;
  const std::uint16_t ps = acc::PUBLIC | acc::STATIC;
  for (const char* f : {"SBOX", "INV", "MIX", "IMIX"}) {
    FieldModel fm;
    fm.access.bits = acc::STATIC | acc::FINAL;
    fm.name = f;
    fm.descriptor = "[I";
    cls.fields.push_back(fm);
  }
  add_default_constructor(cls);
  auto call = [&](CodeBuilder& b, const char* m, const char* d) { b.invoke(op::INVOKESTATIC, self, m, d); };
  auto table = [&](CodeBuilder& b, const char* f) { b.field(op::GETSTATIC, self, f, "[I"); };

  {
    const auto sbox = make_sbox();
    std::vector<int> fwd(sbox.begin(), sbox.end()), inv(256);
    for (int i = 0; i < 256; ++i) inv[sbox[i]] = i;
    CodeBuilder b;
    static_table(b, self, "SBOX", fwd);
    static_table(b, self, "INV", inv);
    static_table(b, self, "MIX", {2, 3, 1, 1});
    static_table(b, self, "IMIX", {14, 11, 13, 9});
    b.op(op::RETURN);
    add_method(cls, acc::STATIC, "<clinit>", "()V", b.take());
  }
  {
    // int xtime(int x) { int r = x << 1; if ((x & 0x80) != 0) r ^= 0x1b; return r & 0xff; }
    CodeBuilder b;
    const auto l = b.label();
    b.var(op::ILOAD, 0).iconst(1).op(op::ISHL).var(op::ISTORE, 1);
    b.var(op::ILOAD, 0).iconst(0x80).op(op::IAND).jump(op::IFEQ, l);
    b.var(op::ILOAD, 1).iconst(0x1b).op(op::IXOR).var(op::ISTORE, 1);
    b.mark(l).var(op::ILOAD, 1).iconst(0xff).op(op::IAND).op(op::IRETURN);
    add_method(cls, ps, "xtime", "(I)I", b.take());
  }
  {
    // int mul(int a, int b) { int r = 0; while (b != 0) { if ((b & 1) != 0) r ^= a; a = xtime(a); b >>= 1; } return r; }
    CodeBuilder b;
    const auto cond = b.label(), body = b.label(), skip = b.label();
    b.iconst(0).var(op::ISTORE, 2).jump(op::GOTO, cond);
    b.mark(body).var(op::ILOAD, 1).iconst(1).op(op::IAND).jump(op::IFEQ, skip);
    b.var(op::ILOAD, 2).var(op::ILOAD, 0).op(op::IXOR).var(op::ISTORE, 2);
    b.mark(skip).var(op::ILOAD, 0);
    call(b, "xtime", "(I)I");
    b.var(op::ISTORE, 0).var(op::ILOAD, 1).iconst(1).op(op::ISHR).var(op::ISTORE, 1);
    b.mark(cond).var(op::ILOAD, 1).jump(op::IFNE, body);
    b.var(op::ILOAD, 2).op(op::IRETURN);
    add_method(cls, ps, "mul", "(II)I", b.take());
  }
  {
    // int[] expandKey(int[] key): key 0, w 1, i 2, t0..t3 3..6, rcon 7, u 8
    CodeBuilder b;
    b.iconst(176).int_op(op::NEWARRAY, kIntArray).var(op::ASTORE, 1);
    count_loop(b, 2, 16, [&] {
      b.var(op::ALOAD, 1).var(op::ILOAD, 2).var(op::ALOAD, 0).var(op::ILOAD, 2).op(op::IALOAD).op(op::IASTORE);
    });
    b.iconst(1).var(op::ISTORE, 7);
    const auto cond = b.label(), body = b.label(), plain = b.label();
    b.iconst(16).var(op::ISTORE, 2).jump(op::GOTO, cond);
    b.mark(body);
    for (int k = 0; k < 4; ++k)
      b.var(op::ALOAD, 1).var(op::ILOAD, 2).iconst(4 - k).op(op::ISUB).op(op::IALOAD).var(op::ISTORE, 3 + k);
    b.var(op::ILOAD, 2).iconst(16).op(op::IREM).jump(op::IFNE, plain);
    b.var(op::ILOAD, 3).var(op::ISTORE, 8);
    table(b, "SBOX");
    b.var(op::ILOAD, 4).op(op::IALOAD).var(op::ILOAD, 7).op(op::IXOR).var(op::ISTORE, 3);
    for (int k = 1; k < 4; ++k) {
      table(b, "SBOX");
      b.var(op::ILOAD, k == 3 ? 8 : 4 + k).op(op::IALOAD).var(op::ISTORE, 3 + k);
    }
    b.var(op::ILOAD, 7);
    call(b, "xtime", "(I)I");
    b.var(op::ISTORE, 7);
    b.mark(plain);
    for (int k = 0; k < 4; ++k) {
      b.var(op::ALOAD, 1).var(op::ILOAD, 2).iconst(k).op(op::IADD);
      b.var(op::ALOAD, 1).var(op::ILOAD, 2).iconst(16 - k).op(op::ISUB).op(op::IALOAD);
      b.var(op::ILOAD, 3 + k).op(op::IXOR).op(op::IASTORE);
    }
    b.iinc(2, 4);
    b.mark(cond).var(op::ILOAD, 2).iconst(176).jump(op::IF_ICMPLT, body);
    b.var(op::ALOAD, 1).op(op::ARETURN);
    add_method(cls, ps, "expandKey", "([I)[I", b.take());
  }
  {
    // void addRoundKey(int[] s, int[] w, int round)
    CodeBuilder b;
    count_loop(b, 3, 16, [&] {
      b.var(op::ALOAD, 0).var(op::ILOAD, 3).var(op::ALOAD, 0).var(op::ILOAD, 3).op(op::IALOAD);
      b.var(op::ALOAD, 1).var(op::ILOAD, 2).iconst(16).op(op::IMUL).var(op::ILOAD, 3).op(op::IADD).op(op::IALOAD);
      b.op(op::IXOR).op(op::IASTORE);
    });
    b.op(op::RETURN);
    add_method(cls, ps, "addRoundKey", "([I[II)V", b.take());
  }
  {
    // void subBytes(int[] s, int[] table) { s[i] = table[s[i]]; }
    CodeBuilder b;
    count_loop(b, 2, 16, [&] {
      b.var(op::ALOAD, 0).var(op::ILOAD, 2).var(op::ALOAD, 1).var(op::ALOAD, 0).var(op::ILOAD, 2);
      b.op(op::IALOAD).op(op::IALOAD).op(op::IASTORE);
    });
    b.op(op::RETURN);
    add_method(cls, ps, "subBytes", "([I[I)V", b.take());
  }
  {
    // void shiftRows(int[] s, int dir): t[i] = s[(i + dir * 4 * (i & 3)) & 15]; copy back
    CodeBuilder b;
    b.iconst(16).int_op(op::NEWARRAY, kIntArray).var(op::ASTORE, 2);
    count_loop(b, 3, 16, [&] {
      b.var(op::ALOAD, 2).var(op::ILOAD, 3).var(op::ALOAD, 0);
      b.var(op::ILOAD, 3).var(op::ILOAD, 1).iconst(4).op(op::IMUL).var(op::ILOAD, 3).iconst(3).op(op::IAND);
      b.op(op::IMUL).op(op::IADD).iconst(15).op(op::IAND).op(op::IALOAD).op(op::IASTORE);
    });
    b.var(op::ALOAD, 2).iconst(0).var(op::ALOAD, 0).iconst(0).iconst(16);
    b.invoke(op::INVOKESTATIC, "java/lang/System", "arraycopy", "(Ljava/lang/Object;ILjava/lang/Object;II)V");
    b.op(op::RETURN);
    add_method(cls, ps, "shiftRows", "([II)V", b.take());
  }
  {
    // void mixColumns(int[] s, int[] m): column c, row r,
    // s[4c+r] = xor over k of mul(a[k], m[(k - r) & 3]); a 2, c 3, r 4, k 5, acc 6
    CodeBuilder b;
    b.iconst(4).int_op(op::NEWARRAY, kIntArray).var(op::ASTORE, 2);
    count_loop(b, 3, 4, [&] {
      count_loop(b, 5, 4, [&] {
        b.var(op::ALOAD, 2).var(op::ILOAD, 5).var(op::ALOAD, 0);
        b.var(op::ILOAD, 3).iconst(4).op(op::IMUL).var(op::ILOAD, 5).op(op::IADD).op(op::IALOAD).op(op::IASTORE);
      });
      count_loop(b, 4, 4, [&] {
        b.iconst(0).var(op::ISTORE, 6);
        count_loop(b, 5, 4, [&] {
          b.var(op::ILOAD, 6).var(op::ALOAD, 2).var(op::ILOAD, 5).op(op::IALOAD);
          b.var(op::ALOAD, 1).var(op::ILOAD, 5).var(op::ILOAD, 4).op(op::ISUB).iconst(3).op(op::IAND).op(op::IALOAD);
          call(b, "mul", "(II)I");
          b.op(op::IXOR).var(op::ISTORE, 6);
        });
        b.var(op::ALOAD, 0).var(op::ILOAD, 3).iconst(4).op(op::IMUL).var(op::ILOAD, 4).op(op::IADD);
        b.var(op::ILOAD, 6).op(op::IASTORE);
      });
    });
    b.op(op::RETURN);
    add_method(cls, ps, "mixColumns", "([I[I)V", b.take());
  }
  auto ark = [&](CodeBuilder& b, std::function<void()> round) {
    b.var(op::ALOAD, 0).var(op::ALOAD, 1);
    round();
    call(b, "addRoundKey", "([I[II)V");
  };
  auto sub = [&](CodeBuilder& b, const char* t) {
    b.var(op::ALOAD, 0);
    table(b, t);
    call(b, "subBytes", "([I[I)V");
  };
  auto shift = [&](CodeBuilder& b, int dir) {
    b.var(op::ALOAD, 0).iconst(dir);
    call(b, "shiftRows", "([II)V");
  };
  auto mix = [&](CodeBuilder& b, const char* t) {
    b.var(op::ALOAD, 0);
    table(b, t);
    call(b, "mixColumns", "([I[I)V");
  };
  {
    // void encrypt(int[] s, int[] w)
    CodeBuilder b;
    ark(b, [&] { b.iconst(0); });
    const auto cond = b.label(), body = b.label();
    b.iconst(1).var(op::ISTORE, 2).jump(op::GOTO, cond);
    b.mark(body);
    sub(b, "SBOX");
    shift(b, 1);
    mix(b, "MIX");
    ark(b, [&] { b.var(op::ILOAD, 2); });
    b.iinc(2, 1);
    b.mark(cond).var(op::ILOAD, 2).iconst(10).jump(op::IF_ICMPLT, body);
    sub(b, "SBOX");
    shift(b, 1);
    ark(b, [&] { b.iconst(10); });
    b.op(op::RETURN);
    add_method(cls, ps, "encrypt", "([I[I)V", b.take());
  }
  {
    // void decrypt(int[] s, int[] w)
    CodeBuilder b;
    ark(b, [&] { b.iconst(10); });
    const auto cond = b.label(), body = b.label();
    b.iconst(9).var(op::ISTORE, 2).jump(op::GOTO, cond);
    b.mark(body);
    shift(b, -1);
    sub(b, "INV");
    ark(b, [&] { b.var(op::ILOAD, 2); });
    mix(b, "IMIX");
    b.iinc(2, -1);
    b.mark(cond).var(op::ILOAD, 2).jump(op::IFGT, body);
    shift(b, -1);
    sub(b, "INV");
    ark(b, [&] { b.iconst(0); });
    b.op(op::RETURN);
    add_method(cls, ps, "decrypt", "([I[I)V", b.take());
  }
  {
    // void hex(int[] s): two hex digits per byte, then a newline
    CodeBuilder b;
    count_loop(b, 1, 16, [&] {
      out(b);
      b.var(op::ALOAD, 0).var(op::ILOAD, 1).op(op::IALOAD).iconst(256).op(op::IOR);
      b.invoke(op::INVOKESTATIC, "java/lang/Integer", "toHexString", "(I)Ljava/lang/String;");
      b.iconst(1).invoke(op::INVOKEVIRTUAL, "java/lang/String", "substring", "(I)Ljava/lang/String;");
      b.invoke(op::INVOKEVIRTUAL, kPrintStream, "print", "(Ljava/lang/String;)V");
    });
    out(b);
    b.invoke(op::INVOKEVIRTUAL, kPrintStream, "println", "()V");
    b.op(op::RETURN);
    add_method(cls, ps, "hex", "([I)V", b.take());
  }
  {
    // main: args 0, key 1, w 2, s 3, p 4, n 5, off 6, seed 7, i 8, ok 9, sum 10
    CodeBuilder b;
    b.iconst(16).int_op(op::NEWARRAY, kIntArray).var(op::ASTORE, 1);
    count_loop(b, 8, 16, [&] { b.var(op::ALOAD, 1).var(op::ILOAD, 8).var(op::ILOAD, 8).op(op::IASTORE); });
    b.var(op::ALOAD, 1);
    call(b, "expandKey", "([I)[I");
    b.var(op::ASTORE, 2);
    b.iconst(16).int_op(op::NEWARRAY, kIntArray).var(op::ASTORE, 3);
    count_loop(b, 8, 16, [&] {
      b.var(op::ALOAD, 3).var(op::ILOAD, 8).var(op::ILOAD, 8).iconst(0x11).op(op::IMUL).op(op::IASTORE);
    });
    b.var(op::ALOAD, 3).var(op::ALOAD, 2);
    call(b, "encrypt", "([I[I)V");
    b.var(op::ALOAD, 3);
    call(b, "hex", "([I)V");

    b.iconst(16).int_op(op::NEWARRAY, kIntArray).var(op::ASTORE, 4);
    b.var(op::ALOAD, 0).iconst(0).op(op::AALOAD);
    b.invoke(op::INVOKESTATIC, "java/lang/Integer", "parseInt", "(Ljava/lang/String;)I");
    b.iconst(1024).op(op::IMUL).var(op::ISTORE, 5);
    b.iconst(1).var(op::ISTORE, 9).iconst(0).var(op::ISTORE, 10).iconst(12345).var(op::ISTORE, 7);
    const auto cond = b.label(), body = b.label();
    b.iconst(0).var(op::ISTORE, 6).jump(op::GOTO, cond);
    b.mark(body);
    count_loop(b, 8, 16, [&] {
      b.var(op::ILOAD, 7).iconst(1103515245).op(op::IMUL).iconst(12345).op(op::IADD).var(op::ISTORE, 7);
      b.var(op::ALOAD, 3).var(op::ILOAD, 8).var(op::ILOAD, 7).iconst(16).op(op::IUSHR).iconst(0xff).op(op::IAND);
      b.op(op::IASTORE);
      b.var(op::ALOAD, 4).var(op::ILOAD, 8).var(op::ALOAD, 3).var(op::ILOAD, 8).op(op::IALOAD).op(op::IASTORE);
    });
    b.var(op::ALOAD, 3).var(op::ALOAD, 2);
    call(b, "encrypt", "([I[I)V");
    b.var(op::ILOAD, 10).iconst(31).op(op::IMUL).var(op::ALOAD, 3).iconst(0).op(op::IALOAD).op(op::IADD);
    b.var(op::ISTORE, 10);
    b.var(op::ALOAD, 3).var(op::ALOAD, 2);
    call(b, "decrypt", "([I[I)V");
    count_loop(b, 8, 16, [&] {
      const auto same = b.label();
      b.var(op::ALOAD, 3).var(op::ILOAD, 8).op(op::IALOAD).var(op::ALOAD, 4).var(op::ILOAD, 8).op(op::IALOAD);
      b.jump(op::IF_ICMPEQ, same);
      b.iconst(0).var(op::ISTORE, 9);
      b.mark(same);
    });
    b.var(op::ILOAD, 6).iconst(16).op(op::IADD).var(op::ISTORE, 6);
    b.mark(cond).var(op::ILOAD, 6).var(op::ILOAD, 5).jump(op::IF_ICMPLT, body);

    const auto bad = b.label(), print = b.label();
    out(b);
    b.var(op::ILOAD, 9).jump(op::IFEQ, bad);
    b.str("ok").jump(op::GOTO, print);
    b.mark(bad).str("mismatch");
    b.mark(print).invoke(op::INVOKEVIRTUAL, kPrintStream, "println", "(Ljava/lang/String;)V");
    out(b);
    b.var(op::ILOAD, 10).invoke(op::INVOKEVIRTUAL, kPrintStream, "println", "(I)V");
    b.op(op::RETURN);
    add_method(cls, ps, "main", "([Ljava/lang/String;)V", b.take());
  }
  return cls;
}

std::vector<ClassModel> all_fixtures() {
  return {micro_class(), abs_only_class(), probe_class(), iterator_safe_class(), iterator_violation_class(), aes_class()};
}

}  // namespace testsupport

namespace testsupport {

ClassModel loader_class() {
  auto cls = make_class("fixtures/Loader");
  add_default_constructor(cls);
  CodeBuilder b;
  const auto cond = b.label(), top = b.label(), start = b.label(), end = b.label(), handler = b.label(),
             other = b.label(), next = b.label();
  auto report = [&](const char* what) {
    out(b);
    b.str(what).invoke(op::INVOKEVIRTUAL, kPrintStream, "print", "(Ljava/lang/String;)V");
    out(b);
    b.var(op::ALOAD, 2).invoke(op::INVOKEVIRTUAL, kPrintStream, "println", "(Ljava/lang/String;)V");
  };
  b.iconst(0).var(op::ISTORE, 1).jump(op::GOTO, cond);
  b.mark(top).var(op::ALOAD, 0).var(op::ILOAD, 1).op(op::AALOAD).var(op::ASTORE, 2);
  b.mark(start).var(op::ALOAD, 2).iconst(1);
  b.invoke(op::INVOKESTATIC, "java/lang/ClassLoader", "getSystemClassLoader", "()Ljava/lang/ClassLoader;");
  b.invoke(op::INVOKESTATIC, "java/lang/Class", "forName",
           "(Ljava/lang/String;ZLjava/lang/ClassLoader;)Ljava/lang/Class;");
  b.op(op::POP);
  b.mark(end).jump(op::GOTO, next);
  b.mark(handler).var(op::ASTORE, 3);
  b.var(op::ALOAD, 3).type(op::INSTANCEOF, "java/lang/VerifyError").jump(op::IFEQ, other);
  report("verify ");
  b.jump(op::GOTO, next);
  b.mark(other);
  report("other ");
  b.mark(next).iinc(1, 1);
  b.mark(cond).var(op::ILOAD, 1).var(op::ALOAD, 0).op(op::ARRAYLENGTH).jump(op::IF_ICMPLT, top);
  println_str(b, "done");
  b.op(op::RETURN);
  b.handler(start, end, handler, std::nullopt);
  add_method(cls, acc::PUBLIC | acc::STATIC, "main", "([Ljava/lang/String;)V", b.take());
  return cls;
}

}  // namespace testsupport
