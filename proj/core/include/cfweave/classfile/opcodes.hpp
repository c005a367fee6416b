#pragma once

#include <cstdint>
#include <string_view>

namespace cfweave::classfile {

using Opcode = std::uint8_t;

// JVM opcodes. Short-form loads/stores (iload_0, ...) are decoded into their
// long form plus a slot, so they only appear here for the codec.
namespace op {
inline constexpr Opcode NOP = 0;
inline constexpr Opcode ACONST_NULL = 1;
inline constexpr Opcode ICONST_M1 = 2;
inline constexpr Opcode ICONST_0 = 3;
inline constexpr Opcode ICONST_1 = 4;
inline constexpr Opcode ICONST_2 = 5;
inline constexpr Opcode ICONST_3 = 6;
inline constexpr Opcode ICONST_4 = 7;
inline constexpr Opcode ICONST_5 = 8;
inline constexpr Opcode LCONST_0 = 9;
inline constexpr Opcode LCONST_1 = 10;
inline constexpr Opcode FCONST_0 = 11;
inline constexpr Opcode FCONST_1 = 12;
inline constexpr Opcode FCONST_2 = 13;
inline constexpr Opcode DCONST_0 = 14;
inline constexpr Opcode DCONST_1 = 15;
inline constexpr Opcode BIPUSH = 16;
inline constexpr Opcode SIPUSH = 17;
inline constexpr Opcode LDC = 18;
inline constexpr Opcode LDC_W = 19;
inline constexpr Opcode LDC2_W = 20;
inline constexpr Opcode ILOAD = 21;
inline constexpr Opcode LLOAD = 22;
inline constexpr Opcode FLOAD = 23;
inline constexpr Opcode DLOAD = 24;
inline constexpr Opcode ALOAD = 25;
inline constexpr Opcode ILOAD_0 = 26;
inline constexpr Opcode ALOAD_3 = 45;
inline constexpr Opcode IALOAD = 46;
inline constexpr Opcode LALOAD = 47;
inline constexpr Opcode FALOAD = 48;
inline constexpr Opcode DALOAD = 49;
inline constexpr Opcode AALOAD = 50;
inline constexpr Opcode BALOAD = 51;
inline constexpr Opcode CALOAD = 52;
inline constexpr Opcode SALOAD = 53;
inline constexpr Opcode ISTORE = 54;
inline constexpr Opcode LSTORE = 55;
inline constexpr Opcode FSTORE = 56;
inline constexpr Opcode DSTORE = 57;
inline constexpr Opcode ASTORE = 58;
inline constexpr Opcode ISTORE_0 = 59;
inline constexpr Opcode ASTORE_3 = 78;
inline constexpr Opcode IASTORE = 79;
inline constexpr Opcode LASTORE = 80;
inline constexpr Opcode FASTORE = 81;
inline constexpr Opcode DASTORE = 82;
inline constexpr Opcode AASTORE = 83;
inline constexpr Opcode BASTORE = 84;
inline constexpr Opcode CASTORE = 85;
inline constexpr Opcode SASTORE = 86;
inline constexpr Opcode POP = 87;
inline constexpr Opcode POP2 = 88;
inline constexpr Opcode DUP = 89;
inline constexpr Opcode DUP_X1 = 90;
inline constexpr Opcode DUP_X2 = 91;
inline constexpr Opcode DUP2 = 92;
inline constexpr Opcode DUP2_X1 = 93;
inline constexpr Opcode DUP2_X2 = 94;
inline constexpr Opcode SWAP = 95;
inline constexpr Opcode IADD = 96;
inline constexpr Opcode LADD = 97;
inline constexpr Opcode FADD = 98;
inline constexpr Opcode DADD = 99;
inline constexpr Opcode ISUB = 100;
inline constexpr Opcode LSUB = 101;
inline constexpr Opcode FSUB = 102;
inline constexpr Opcode DSUB = 103;
inline constexpr Opcode IMUL = 104;
inline constexpr Opcode LMUL = 105;
inline constexpr Opcode FMUL = 106;
inline constexpr Opcode DMUL = 107;
inline constexpr Opcode IDIV = 108;
inline constexpr Opcode LDIV = 109;
inline constexpr Opcode FDIV = 110;
inline constexpr Opcode DDIV = 111;
inline constexpr Opcode IREM = 112;
inline constexpr Opcode LREM = 113;
inline constexpr Opcode FREM = 114;
inline constexpr Opcode DREM = 115;
inline constexpr Opcode INEG = 116;
inline constexpr Opcode LNEG = 117;
inline constexpr Opcode FNEG = 118;
inline constexpr Opcode DNEG = 119;
inline constexpr Opcode ISHL = 120;
inline constexpr Opcode LSHL = 121;
inline constexpr Opcode ISHR = 122;
inline constexpr Opcode LSHR = 123;
inline constexpr Opcode IUSHR = 124;
inline constexpr Opcode LUSHR = 125;
inline constexpr Opcode IAND = 126;
inline constexpr Opcode LAND = 127;
inline constexpr Opcode IOR = 128;
inline constexpr Opcode LOR = 129;
inline constexpr Opcode IXOR = 130;
inline constexpr Opcode LXOR = 131;
inline constexpr Opcode IINC = 132;
inline constexpr Opcode I2L = 133;
inline constexpr Opcode I2F = 134;
inline constexpr Opcode I2D = 135;
inline constexpr Opcode L2I = 136;
inline constexpr Opcode L2F = 137;
inline constexpr Opcode L2D = 138;
inline constexpr Opcode F2I = 139;
inline constexpr Opcode F2L = 140;
inline constexpr Opcode F2D = 141;
inline constexpr Opcode D2I = 142;
inline constexpr Opcode D2L = 143;
inline constexpr Opcode D2F = 144;
inline constexpr Opcode I2B = 145;
inline constexpr Opcode I2C = 146;
inline constexpr Opcode I2S = 147;
inline constexpr Opcode LCMP = 148;
inline constexpr Opcode FCMPL = 149;
inline constexpr Opcode FCMPG = 150;
inline constexpr Opcode DCMPL = 151;
inline constexpr Opcode DCMPG = 152;
inline constexpr Opcode IFEQ = 153;
inline constexpr Opcode IFNE = 154;
inline constexpr Opcode IFLT = 155;
inline constexpr Opcode IFGE = 156;
inline constexpr Opcode IFGT = 157;
inline constexpr Opcode IFLE = 158;
inline constexpr Opcode IF_ICMPEQ = 159;
inline constexpr Opcode IF_ICMPNE = 160;
inline constexpr Opcode IF_ICMPLT = 161;
inline constexpr Opcode IF_ICMPGE = 162;
inline constexpr Opcode IF_ICMPGT = 163;
inline constexpr Opcode IF_ICMPLE = 164;
inline constexpr Opcode IF_ACMPEQ = 165;
inline constexpr Opcode IF_ACMPNE = 166;
inline constexpr Opcode GOTO = 167;
inline constexpr Opcode JSR = 168;
inline constexpr Opcode RET = 169;
inline constexpr Opcode TABLESWITCH = 170;
inline constexpr Opcode LOOKUPSWITCH = 171;
inline constexpr Opcode IRETURN = 172;
inline constexpr Opcode LRETURN = 173;
inline constexpr Opcode FRETURN = 174;
inline constexpr Opcode DRETURN = 175;
inline constexpr Opcode ARETURN = 176;
inline constexpr Opcode RETURN = 177;
inline constexpr Opcode GETSTATIC = 178;
inline constexpr Opcode PUTSTATIC = 179;
inline constexpr Opcode GETFIELD = 180;
inline constexpr Opcode PUTFIELD = 181;
inline constexpr Opcode INVOKEVIRTUAL = 182;
inline constexpr Opcode INVOKESPECIAL = 183;
inline constexpr Opcode INVOKESTATIC = 184;
inline constexpr Opcode INVOKEINTERFACE = 185;
inline constexpr Opcode INVOKEDYNAMIC = 186;
inline constexpr Opcode NEW = 187;
inline constexpr Opcode NEWARRAY = 188;
inline constexpr Opcode ANEWARRAY = 189;
inline constexpr Opcode ARRAYLENGTH = 190;
inline constexpr Opcode ATHROW = 191;
inline constexpr Opcode CHECKCAST = 192;
inline constexpr Opcode INSTANCEOF = 193;
inline constexpr Opcode MONITORENTER = 194;
inline constexpr Opcode MONITOREXIT = 195;
inline constexpr Opcode WIDE = 196;
inline constexpr Opcode MULTIANEWARRAY = 197;
inline constexpr Opcode IFNULL = 198;
inline constexpr Opcode IFNONNULL = 199;
inline constexpr Opcode GOTO_W = 200;
inline constexpr Opcode JSR_W = 201;
}  // namespace op

// How an opcode's operands are laid out in the code array.
enum class OperandFormat : std::uint8_t {
  None,
  Local,         // u1 slot (u2 under wide)
  LocalImplied,  // iload_0 style
  Byte,          // bipush, newarray
  Short,         // sipush
  PoolU1,        // ldc
  PoolU2,        // ldc_w, ldc2_w, field/method/type refs
  Branch2,
  Branch4,
  Iinc,
  TableSwitch,
  LookupSwitch,
  InvokeInterface,
  InvokeDynamic,
  MultiANewArray,
  Wide,
  Invalid,
};

struct OpcodeInfo {
  std::string_view mnemonic;
  OperandFormat format;
};

const OpcodeInfo& opcode_info(Opcode opcode) noexcept;

inline std::string_view mnemonic(Opcode opcode) noexcept { return opcode_info(opcode).mnemonic; }

constexpr bool is_conditional_jump(Opcode o) noexcept {
  return (o >= op::IFEQ && o <= op::IF_ACMPNE) || o == op::IFNULL || o == op::IFNONNULL;
}
constexpr bool is_unconditional_jump(Opcode o) noexcept {
  return o == op::GOTO || o == op::GOTO_W;
}
constexpr bool is_switch(Opcode o) noexcept {
  return o == op::TABLESWITCH || o == op::LOOKUPSWITCH;
}
constexpr bool is_return(Opcode o) noexcept { return o >= op::IRETURN && o <= op::RETURN; }
constexpr bool is_invoke(Opcode o) noexcept {
  return o >= op::INVOKEVIRTUAL && o <= op::INVOKEDYNAMIC;
}

// Opcodes after which control never falls through to the next instruction.
constexpr bool ends_flow(Opcode o) noexcept {
  return is_unconditional_jump(o) || is_switch(o) || is_return(o) || o == op::ATHROW ||
         o == op::RET;
}

// Operands consumed by a conditional jump, or -1 for anything else.
constexpr int conditional_jump_operands(Opcode o) noexcept {
  if ((o >= op::IFEQ && o <= op::IFLE) || o == op::IFNULL || o == op::IFNONNULL) return 1;
  if (o >= op::IF_ICMPEQ && o <= op::IF_ACMPNE) return 2;
  return -1;
}

// The conditional jump testing the opposite condition.
constexpr Opcode negate_jump(Opcode o) noexcept {
  switch (o) {
    case op::IFNULL: return op::IFNONNULL;
    case op::IFNONNULL: return op::IFNULL;
    default:
      // IFEQ/IFNE, IFLT/IFGE, ... come in adjacent pairs starting at an odd opcode.
      return static_cast<Opcode>(((o - op::IFEQ) % 2 == 0) ? o + 1 : o - 1);
  }
}

}  // namespace cfweave::classfile
