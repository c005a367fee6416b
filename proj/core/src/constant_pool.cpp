#include "cfweave/classfile/constant_pool.hpp"

#include <cstring>

namespace cfweave::classfile {

namespace cp {
std::uint8_t tag_of(const Entry& e) noexcept {
  struct Visitor {
    std::uint8_t operator()(const Unusable&) const { return 0; }
    std::uint8_t operator()(const Utf8&) const { return tag::Utf8; }
    std::uint8_t operator()(const Integer&) const { return tag::Integer; }
    std::uint8_t operator()(const Float&) const { return tag::Float; }
    std::uint8_t operator()(const Long&) const { return tag::Long; }
    std::uint8_t operator()(const Double&) const { return tag::Double; }
    std::uint8_t operator()(const Class&) const { return tag::Class; }
    std::uint8_t operator()(const String&) const { return tag::String; }
    std::uint8_t operator()(const MemberRef& m) const { return m.tag; }
    std::uint8_t operator()(const NameAndType&) const { return tag::NameAndType; }
    std::uint8_t operator()(const MethodHandle&) const { return tag::MethodHandle; }
    std::uint8_t operator()(const MethodType&) const { return tag::MethodType; }
    std::uint8_t operator()(const DynamicRef& d) const { return d.tag; }
    std::uint8_t operator()(const ModuleRef&) const { return tag::Module; }
    std::uint8_t operator()(const PackageRef&) const { return tag::Package; }
  };
  return std::visit(Visitor{}, e);
}
}  // namespace cp

namespace {
constexpr std::size_t kMaxSlots = 65535;  // constant_pool_count is a u2

bool is_two_slot(const cp::Entry& e) {
  return std::holds_alternative<cp::Long>(e) || std::holds_alternative<cp::Double>(e);
}
}  // namespace

ConstantPool::ConstantPool() { entries_.emplace_back(cp::Unusable{}); }

ConstantPool ConstantPool::read(ByteReader& in) {
  ConstantPool pool;
  const std::uint16_t count = in.u2();
  if (count == 0) throw MalformedClass("constant_pool_count is zero");
  pool.entries_.reserve(count);
  while (pool.entries_.size() < count) {
    const std::uint8_t t = in.u1();
    switch (t) {
      case tag::Utf8: {
        const std::uint16_t len = in.u2();
        pool.entries_.emplace_back(cp::Utf8{in.take_string(len)});
        break;
      }
      case tag::Integer: pool.entries_.emplace_back(cp::Integer{in.s4()}); break;
      case tag::Float: pool.entries_.emplace_back(cp::Float{in.u4()}); break;
      case tag::Long:
      case tag::Double: {
        const std::uint64_t hi = in.u4();
        const std::uint64_t bits = (hi << 32) | in.u4();
        if (t == tag::Long)
          pool.entries_.emplace_back(cp::Long{static_cast<std::int64_t>(bits)});
        else
          pool.entries_.emplace_back(cp::Double{bits});
        if (pool.entries_.size() >= count) throw MalformedClass("8-byte constant in the last pool slot");
        pool.entries_.emplace_back(cp::Unusable{});
        break;
      }
      case tag::Class: pool.entries_.emplace_back(cp::Class{in.u2()}); break;
      case tag::String: pool.entries_.emplace_back(cp::String{in.u2()}); break;
      case tag::Fieldref:
      case tag::Methodref:
      case tag::InterfaceMethodref: {
        const std::uint16_t owner = in.u2();
        pool.entries_.emplace_back(cp::MemberRef{t, owner, in.u2()});
        break;
      }
      case tag::NameAndType: {
        const std::uint16_t name = in.u2();
        pool.entries_.emplace_back(cp::NameAndType{name, in.u2()});
        break;
      }
      case tag::MethodHandle: {
        const std::uint8_t kind = in.u1();
        pool.entries_.emplace_back(cp::MethodHandle{kind, in.u2()});
        break;
      }
      case tag::MethodType: pool.entries_.emplace_back(cp::MethodType{in.u2()}); break;
      case tag::Dynamic:
      case tag::InvokeDynamic: {
        const std::uint16_t bsm = in.u2();
        pool.entries_.emplace_back(cp::DynamicRef{t, bsm, in.u2()});
        break;
      }
      case tag::Module: pool.entries_.emplace_back(cp::ModuleRef{in.u2()}); break;
      case tag::Package: pool.entries_.emplace_back(cp::PackageRef{in.u2()}); break;
      default:
        throw MalformedClass("unknown constant pool tag " + std::to_string(t) + " at index " +
                             std::to_string(pool.entries_.size()));
    }
  }
  pool.validate();
  return pool;
}

void ConstantPool::write(ByteWriter& out) const {
  out.u2(static_cast<std::uint32_t>(entries_.size()));
  for (const auto& e : entries_) {
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, cp::Unusable>) {
            return;
          } else if constexpr (std::is_same_v<T, cp::Utf8>) {
            out.u1(tag::Utf8);
            out.u2(static_cast<std::uint32_t>(v.value.size()));
            out.bytes(v.value);
          } else if constexpr (std::is_same_v<T, cp::Integer>) {
            out.u1(tag::Integer);
            out.u4(static_cast<std::uint32_t>(v.value));
          } else if constexpr (std::is_same_v<T, cp::Float>) {
            out.u1(tag::Float);
            out.u4(v.bits);
          } else if constexpr (std::is_same_v<T, cp::Long>) {
            out.u1(tag::Long);
            out.u4(static_cast<std::uint32_t>(static_cast<std::uint64_t>(v.value) >> 32));
            out.u4(static_cast<std::uint32_t>(v.value));
          } else if constexpr (std::is_same_v<T, cp::Double>) {
            out.u1(tag::Double);
            out.u4(static_cast<std::uint32_t>(v.bits >> 32));
            out.u4(static_cast<std::uint32_t>(v.bits));
          } else if constexpr (std::is_same_v<T, cp::Class>) {
            out.u1(tag::Class);
            out.u2(v.name);
          } else if constexpr (std::is_same_v<T, cp::String>) {
            out.u1(tag::String);
            out.u2(v.utf8);
          } else if constexpr (std::is_same_v<T, cp::MemberRef>) {
            out.u1(v.tag);
            out.u2(v.owner);
            out.u2(v.name_and_type);
          } else if constexpr (std::is_same_v<T, cp::NameAndType>) {
            out.u1(tag::NameAndType);
            out.u2(v.name);
            out.u2(v.descriptor);
          } else if constexpr (std::is_same_v<T, cp::MethodHandle>) {
            out.u1(tag::MethodHandle);
            out.u1(v.kind);
            out.u2(v.reference);
          } else if constexpr (std::is_same_v<T, cp::MethodType>) {
            out.u1(tag::MethodType);
            out.u2(v.descriptor);
          } else if constexpr (std::is_same_v<T, cp::DynamicRef>) {
            out.u1(v.tag);
            out.u2(v.bootstrap);
            out.u2(v.name_and_type);
          } else if constexpr (std::is_same_v<T, cp::ModuleRef>) {
            out.u1(tag::Module);
            out.u2(v.name);
          } else if constexpr (std::is_same_v<T, cp::PackageRef>) {
            out.u1(tag::Package);
            out.u2(v.name);
          }
        },
        e);
  }
}

const cp::Entry& ConstantPool::at(std::uint16_t index) const {
  if (index == 0 || index >= entries_.size() || std::holds_alternative<cp::Unusable>(entries_[index]))
    throw MalformedClass("dangling constant pool index " + std::to_string(index));
  return entries_[index];
}

std::pair<const std::string&, const std::string&> ConstantPool::name_and_type(std::uint16_t index) const {
  const auto& nat = get<cp::NameAndType>(index);
  return {utf8(nat.name), utf8(nat.descriptor)};
}

MemberRef ConstantPool::member(std::uint16_t index) const {
  const auto& m = get<cp::MemberRef>(index);
  auto [name, desc] = name_and_type(m.name_and_type);
  return MemberRef{class_name(m.owner), name, desc};
}

void ConstantPool::validate() const {
  auto expect = [&](std::uint16_t idx, std::uint8_t t, std::size_t from) {
    if (idx == 0 || idx >= entries_.size() || cp::tag_of(entries_[idx]) != t)
      throw MalformedClass("constant pool entry " + std::to_string(from) + " references invalid index " +
                           std::to_string(idx));
  };
  for (std::size_t i = 1; i < entries_.size(); ++i) {
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, cp::Class>) {
            expect(v.name, tag::Utf8, i);
          } else if constexpr (std::is_same_v<T, cp::String>) {
            expect(v.utf8, tag::Utf8, i);
          } else if constexpr (std::is_same_v<T, cp::MemberRef>) {
            expect(v.owner, tag::Class, i);
            expect(v.name_and_type, tag::NameAndType, i);
          } else if constexpr (std::is_same_v<T, cp::NameAndType>) {
            expect(v.name, tag::Utf8, i);
            expect(v.descriptor, tag::Utf8, i);
          } else if constexpr (std::is_same_v<T, cp::MethodType>) {
            expect(v.descriptor, tag::Utf8, i);
          } else if constexpr (std::is_same_v<T, cp::DynamicRef>) {
            expect(v.name_and_type, tag::NameAndType, i);
          } else if constexpr (std::is_same_v<T, cp::ModuleRef> || std::is_same_v<T, cp::PackageRef>) {
            expect(v.name, tag::Utf8, i);
          } else if constexpr (std::is_same_v<T, cp::MethodHandle>) {
            if (v.reference == 0 || v.reference >= entries_.size())
              throw MalformedClass("method handle " + std::to_string(i) + " has dangling reference");
          }
        },
        entries_[i]);
  }
}

std::string ConstantPool::key_of(const cp::Entry& e) {
  // Tag byte followed by the entry's class-file payload; unique per value.
  ConstantPool tmp;
  tmp.entries_.push_back(e);
  ByteWriter w;
  tmp.write(w);
  const auto& d = w.data();
  return std::string(d.begin() + 2, d.end());
}

void ConstantPool::build_index() const {
  if (indexed_) return;
  index_.clear();
  for (std::size_t i = 1; i < entries_.size(); ++i) {
    if (std::holds_alternative<cp::Unusable>(entries_[i])) continue;
    index_.emplace(key_of(entries_[i]), static_cast<std::uint16_t>(i));  // keeps the lowest index
  }
  indexed_ = true;
}

std::uint16_t ConstantPool::append(const cp::Entry& entry) {
  const std::size_t need = is_two_slot(entry) ? 2 : 1;
  if (entries_.size() + need > kMaxSlots)
    throw PoolOverflow("constant pool exceeds 65534 entries");
  const auto idx = static_cast<std::uint16_t>(entries_.size());
  entries_.push_back(entry);
  if (need == 2) entries_.emplace_back(cp::Unusable{});
  if (indexed_) index_.emplace(key_of(entry), idx);
  return idx;
}

std::uint16_t ConstantPool::intern(const cp::Entry& entry) {
  if (std::holds_alternative<cp::Unusable>(entry)) throw MalformedClass("cannot intern an unusable slot");
  build_index();
  if (auto it = index_.find(key_of(entry)); it != index_.end()) return it->second;
  return append(entry);
}

std::uint16_t ConstantPool::intern_utf8(std::string_view s) {
  if (s.size() > 0xFFFF) throw PoolOverflow("utf8 constant longer than 65535 bytes");
  return intern(cp::Utf8{std::string(s)});
}
std::uint16_t ConstantPool::intern_class(std::string_view internal_name) {
  return intern(cp::Class{intern_utf8(internal_name)});
}
std::uint16_t ConstantPool::intern_string(std::string_view s) { return intern(cp::String{intern_utf8(s)}); }
std::uint16_t ConstantPool::intern_int(std::int32_t v) { return intern(cp::Integer{v}); }
std::uint16_t ConstantPool::intern_float_bits(std::uint32_t bits) { return intern(cp::Float{bits}); }
std::uint16_t ConstantPool::intern_long(std::int64_t v) { return intern(cp::Long{v}); }
std::uint16_t ConstantPool::intern_double_bits(std::uint64_t bits) { return intern(cp::Double{bits}); }
std::uint16_t ConstantPool::intern_name_and_type(std::string_view name, std::string_view descriptor) {
  const auto n = intern_utf8(name);
  const auto d = intern_utf8(descriptor);
  return intern(cp::NameAndType{n, d});
}
std::uint16_t ConstantPool::intern_member(std::uint8_t member_tag, const MemberRef& ref) {
  const auto owner = intern_class(ref.owner);
  const auto nat = intern_name_and_type(ref.name, ref.descriptor);
  return intern(cp::MemberRef{member_tag, owner, nat});
}
std::uint16_t ConstantPool::intern_method_type(std::string_view descriptor) {
  return intern(cp::MethodType{intern_utf8(descriptor)});
}

std::uint16_t ConstantPool::intern_utf8(std::string_view s, PoolHint hint) {
  if (hint.index > 0 && hint.index < entries_.size()) {
    const auto* u = std::get_if<cp::Utf8>(&entries_[hint.index]);
    if (u != nullptr && u->value == s) return hint.index;
  }
  return intern_utf8(s);
}
std::uint16_t ConstantPool::intern_class(std::string_view internal_name, PoolHint hint) {
  if (hint.index > 0 && hint.index < entries_.size()) {
    const auto* c = std::get_if<cp::Class>(&entries_[hint.index]);
    if (c != nullptr && utf8(c->name) == internal_name) return hint.index;
  }
  return intern_class(internal_name);
}
std::uint16_t ConstantPool::intern_member(std::uint8_t member_tag, const MemberRef& ref, PoolHint hint) {
  if (hint.index > 0 && hint.index < entries_.size()) {
    const auto* m = std::get_if<cp::MemberRef>(&entries_[hint.index]);
    if (m != nullptr && m->tag == member_tag && member(hint.index) == ref) return hint.index;
  }
  return intern_member(member_tag, ref);
}

}  // namespace cfweave::classfile
