#include "cfweave/classfile/opcodes.hpp"

#include <array>

namespace cfweave::classfile {
namespace {

using F = OperandFormat;

constexpr std::array<OpcodeInfo, 202> kOpcodes{{
    {"nop", F::None},
    {"aconst_null", F::None},
    {"iconst_m1", F::None},
    {"iconst_0", F::None},
    {"iconst_1", F::None},
    {"iconst_2", F::None},
    {"iconst_3", F::None},
    {"iconst_4", F::None},
    {"iconst_5", F::None},
    {"lconst_0", F::None},
    {"lconst_1", F::None},
    {"fconst_0", F::None},
    {"fconst_1", F::None},
    {"fconst_2", F::None},
    {"dconst_0", F::None},
    {"dconst_1", F::None},
    {"bipush", F::Byte},
    {"sipush", F::Short},
    {"ldc", F::PoolU1},
    {"ldc_w", F::PoolU2},
    {"ldc2_w", F::PoolU2},
    {"iload", F::Local},
    {"lload", F::Local},
    {"fload", F::Local},
    {"dload", F::Local},
    {"aload", F::Local},
    {"iload_0", F::LocalImplied},
    {"iload_1", F::LocalImplied},
    {"iload_2", F::LocalImplied},
    {"iload_3", F::LocalImplied},
    {"lload_0", F::LocalImplied},
    {"lload_1", F::LocalImplied},
    {"lload_2", F::LocalImplied},
    {"lload_3", F::LocalImplied},
    {"fload_0", F::LocalImplied},
    {"fload_1", F::LocalImplied},
    {"fload_2", F::LocalImplied},
    {"fload_3", F::LocalImplied},
    {"dload_0", F::LocalImplied},
    {"dload_1", F::LocalImplied},
    {"dload_2", F::LocalImplied},
    {"dload_3", F::LocalImplied},
    {"aload_0", F::LocalImplied},
    {"aload_1", F::LocalImplied},
    {"aload_2", F::LocalImplied},
    {"aload_3", F::LocalImplied},
    {"iaload", F::None},
    {"laload", F::None},
    {"faload", F::None},
    {"daload", F::None},
    {"aaload", F::None},
    {"baload", F::None},
    {"caload", F::None},
    {"saload", F::None},
    {"istore", F::Local},
    {"lstore", F::Local},
    {"fstore", F::Local},
    {"dstore", F::Local},
    {"astore", F::Local},
    {"istore_0", F::LocalImplied},
    {"istore_1", F::LocalImplied},
    {"istore_2", F::LocalImplied},
    {"istore_3", F::LocalImplied},
    {"lstore_0", F::LocalImplied},
    {"lstore_1", F::LocalImplied},
    {"lstore_2", F::LocalImplied},
    {"lstore_3", F::LocalImplied},
    {"fstore_0", F::LocalImplied},
    {"fstore_1", F::LocalImplied},
    {"fstore_2", F::LocalImplied},
    {"fstore_3", F::LocalImplied},
    {"dstore_0", F::LocalImplied},
    {"dstore_1", F::LocalImplied},
    {"dstore_2", F::LocalImplied},
    {"dstore_3", F::LocalImplied},
    {"astore_0", F::LocalImplied},
    {"astore_1", F::LocalImplied},
    {"astore_2", F::LocalImplied},
    {"astore_3", F::LocalImplied},
    {"iastore", F::None},
    {"lastore", F::None},
    {"fastore", F::None},
    {"dastore", F::None},
    {"aastore", F::None},
    {"bastore", F::None},
    {"castore", F::None},
    {"sastore", F::None},
    {"pop", F::None},
    {"pop2", F::None},
    {"dup", F::None},
    {"dup_x1", F::None},
    {"dup_x2", F::None},
    {"dup2", F::None},
    {"dup2_x1", F::None},
    {"dup2_x2", F::None},
    {"swap", F::None},
    {"iadd", F::None},
    {"ladd", F::None},
    {"fadd", F::None},
    {"dadd", F::None},
    {"isub", F::None},
    {"lsub", F::None},
    {"fsub", F::None},
    {"dsub", F::None},
    {"imul", F::None},
    {"lmul", F::None},
    {"fmul", F::None},
    {"dmul", F::None},
    {"idiv", F::None},
    {"ldiv", F::None},
    {"fdiv", F::None},
    {"ddiv", F::None},
    {"irem", F::None},
    {"lrem", F::None},
    {"frem", F::None},
    {"drem", F::None},
    {"ineg", F::None},
    {"lneg", F::None},
    {"fneg", F::None},
    {"dneg", F::None},
    {"ishl", F::None},
    {"lshl", F::None},
    {"ishr", F::None},
    {"lshr", F::None},
    {"iushr", F::None},
    {"lushr", F::None},
    {"iand", F::None},
    {"land", F::None},
    {"ior", F::None},
    {"lor", F::None},
    {"ixor", F::None},
    {"lxor", F::None},
    {"iinc", F::Iinc},
    {"i2l", F::None},
    {"i2f", F::None},
    {"i2d", F::None},
    {"l2i", F::None},
    {"l2f", F::None},
    {"l2d", F::None},
    {"f2i", F::None},
    {"f2l", F::None},
    {"f2d", F::None},
    {"d2i", F::None},
    {"d2l", F::None},
    {"d2f", F::None},
    {"i2b", F::None},
    {"i2c", F::None},
    {"i2s", F::None},
    {"lcmp", F::None},
    {"fcmpl", F::None},
    {"fcmpg", F::None},
    {"dcmpl", F::None},
    {"dcmpg", F::None},
    {"ifeq", F::Branch2},
    {"ifne", F::Branch2},
    {"iflt", F::Branch2},
    {"ifge", F::Branch2},
    {"ifgt", F::Branch2},
    {"ifle", F::Branch2},
    {"if_icmpeq", F::Branch2},
    {"if_icmpne", F::Branch2},
    {"if_icmplt", F::Branch2},
    {"if_icmpge", F::Branch2},
    {"if_icmpgt", F::Branch2},
    {"if_icmple", F::Branch2},
    {"if_acmpeq", F::Branch2},
    {"if_acmpne", F::Branch2},
    {"goto", F::Branch2},
    {"jsr", F::Branch2},
    {"ret", F::Local},
    {"tableswitch", F::TableSwitch},
    {"lookupswitch", F::LookupSwitch},
    {"ireturn", F::None},
    {"lreturn", F::None},
    {"freturn", F::None},
    {"dreturn", F::None},
    {"areturn", F::None},
    {"return", F::None},
    {"getstatic", F::PoolU2},
    {"putstatic", F::PoolU2},
    {"getfield", F::PoolU2},
    {"putfield", F::PoolU2},
    {"invokevirtual", F::PoolU2},
    {"invokespecial", F::PoolU2},
    {"invokestatic", F::PoolU2},
    {"invokeinterface", F::InvokeInterface},
    {"invokedynamic", F::InvokeDynamic},
    {"new", F::PoolU2},
    {"newarray", F::Byte},
    {"anewarray", F::PoolU2},
    {"arraylength", F::None},
    {"athrow", F::None},
    {"checkcast", F::PoolU2},
    {"instanceof", F::PoolU2},
    {"monitorenter", F::None},
    {"monitorexit", F::None},
    {"wide", F::Wide},
    {"multianewarray", F::MultiANewArray},
    {"ifnull", F::Branch2},
    {"ifnonnull", F::Branch2},
    {"goto_w", F::Branch4},
    {"jsr_w", F::Branch4},
}};

constexpr OpcodeInfo kInvalid{"<invalid>", F::Invalid};

}  // namespace

const OpcodeInfo& opcode_info(Opcode opcode) noexcept {
  return opcode < kOpcodes.size() ? kOpcodes[opcode] : kInvalid;
}

}  // namespace cfweave::classfile
