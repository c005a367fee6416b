#include <algorithm>

#include "cfweave/classfile/class_model.hpp"
#include "cfweave/error.hpp"

namespace cfweave::classfile {

namespace {

constexpr std::uint32_t kMagic = 0xCAFEBABE;

std::vector<RawAttribute> read_attributes(ByteReader& in, const ConstantPool& pool) {
  std::vector<RawAttribute> out(in.u2());
  for (auto& a : out) {
    a.name_index.index = in.u2();
    a.name = pool.utf8(a.name_index.index);
    const auto data = in.take(in.u4());
    a.data.assign(data.begin(), data.end());
  }
  return out;
}

void write_attribute(ByteWriter& out, ConstantPool& pool, std::string_view name, const Bytes& data,
                     PoolHint hint) {
  out.u2(pool.intern_utf8(name, hint));
  out.u4(static_cast<std::uint32_t>(data.size()));
  out.bytes(data);
}

PoolHint hint_at(const std::vector<PoolHint>& hints, std::size_t k) {
  return k < hints.size() ? hints[k] : PoolHint{};
}

MethodModel read_method(ByteReader& in, const ConstantPool& pool) {
  MethodModel m;
  m.access.bits = in.u2();
  m.name_hint.index = in.u2();
  m.name = pool.utf8(m.name_hint.index);
  m.descriptor_hint.index = in.u2();
  m.descriptor = pool.utf8(m.descriptor_hint.index);
  m.attributes = read_attributes(in, pool);
  bool seen_code = false, seen_exceptions = false;
  for (auto& a : m.attributes) {
    if (a.name == "Code") {
      if (seen_code) throw MalformedClass("method " + m.name + " has two Code attributes");
      seen_code = true;
      try {
        m.code = decode_code(a.data, pool);
      } catch (const MalformedClass& e) {
        throw MalformedClass("method " + m.name + m.descriptor + ": " + e.what());
      }
      a.data.clear();
    } else if (a.name == "Exceptions" && !seen_exceptions) {
      seen_exceptions = true;
      ByteReader r(a.data);
      const std::uint16_t n = r.u2();
      for (std::uint16_t k = 0; k < n; ++k) {
        m.exception_hints.push_back({r.u2()});
        m.exceptions_thrown.push_back(pool.class_name(m.exception_hints.back().index));
      }
      if (!r.at_end()) throw MalformedClass("trailing bytes in Exceptions attribute");
      a.data.clear();
    }
  }
  const bool bodyless = m.access.has(acc::ABSTRACT) || m.access.has(acc::NATIVE);
  if (bodyless && seen_code) throw MalformedClass("abstract or native method " + m.name + " has code");
  if (!bodyless && !seen_code) throw MalformedClass("method " + m.name + " has no Code attribute");
  return m;
}

}  // namespace

std::vector<std::pair<Label, std::uint16_t>> CodeBody::line_table() const {
  std::vector<std::pair<Label, std::uint16_t>> out;
  for (const auto& i : insns)
    if (const auto* ln = i.get_if<operand::LineNumber>()) out.emplace_back(ln->start, ln->line);
  return out;
}

std::size_t CodeBody::find_label(Label l) const {
  for (std::size_t i = 0; i < insns.size(); ++i) {
    const auto* p = insns[i].get_if<operand::Label>();
    if (p != nullptr && p->label == l) return i;
  }
  return static_cast<std::size_t>(-1);
}

const FieldModel* ClassModel::find_field(std::string_view name) const {
  auto it = std::find_if(fields.begin(), fields.end(), [&](const FieldModel& f) { return f.name == name; });
  return it == fields.end() ? nullptr : &*it;
}

ClassModel parse_class(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  if (in.u4() != kMagic) throw MalformedClass("bad magic number");
  ClassModel c;
  c.minor_version = in.u2();
  c.major_version = in.u2();
  if (c.major_version < kMinSupportedMajor || c.major_version > kMaxSupportedMajor)
    throw UnsupportedVersion("class file version " + std::to_string(c.major_version) + "." +
                             std::to_string(c.minor_version) + " is outside " + std::to_string(kMinSupportedMajor) +
                             ".." + std::to_string(kMaxSupportedMajor));
  c.constant_pool = ConstantPool::read(in);
  c.constant_pool.validate();
  const auto& pool = c.constant_pool;
  c.access.bits = in.u2();
  c.this_hint.index = in.u2();
  c.this_class = pool.class_name(c.this_hint.index);
  c.super_hint.index = in.u2();
  if (c.super_hint.index != 0) c.super_class = pool.class_name(c.super_hint.index);
  const std::uint16_t ni = in.u2();
  for (std::uint16_t k = 0; k < ni; ++k) {
    c.interface_hints.push_back({in.u2()});
    c.interfaces.push_back(pool.class_name(c.interface_hints.back().index));
  }
  const std::uint16_t nf = in.u2();
  for (std::uint16_t k = 0; k < nf; ++k) {
    FieldModel f;
    f.access.bits = in.u2();
    f.name_hint.index = in.u2();
    f.name = pool.utf8(f.name_hint.index);
    f.descriptor_hint.index = in.u2();
    f.descriptor = pool.utf8(f.descriptor_hint.index);
    f.attributes = read_attributes(in, pool);
    c.fields.push_back(std::move(f));
  }
  const std::uint16_t nm = in.u2();
  for (std::uint16_t k = 0; k < nm; ++k) c.methods.push_back(read_method(in, pool));
  c.attributes = read_attributes(in, pool);
  if (!in.at_end()) throw MalformedClass("trailing bytes after class attributes");
  return c;
}

Bytes emit_class(ClassModel& model) {
  auto& pool = model.constant_pool;
  ByteWriter body;
  body.u2(model.access.bits);
  body.u2(pool.intern_class(model.this_class, model.this_hint));
  body.u2(model.super_class ? pool.intern_class(*model.super_class, model.super_hint) : 0);
  body.u2(static_cast<std::uint32_t>(model.interfaces.size()));
  for (std::size_t k = 0; k < model.interfaces.size(); ++k)
    body.u2(pool.intern_class(model.interfaces[k], hint_at(model.interface_hints, k)));

  body.u2(static_cast<std::uint32_t>(model.fields.size()));
  for (const auto& f : model.fields) {
    body.u2(f.access.bits);
    body.u2(pool.intern_utf8(f.name, f.name_hint));
    body.u2(pool.intern_utf8(f.descriptor, f.descriptor_hint));
    body.u2(static_cast<std::uint32_t>(f.attributes.size()));
    for (const auto& a : f.attributes) write_attribute(body, pool, a.name, a.data, a.name_index);
  }

  body.u2(static_cast<std::uint32_t>(model.methods.size()));
  for (const auto& m : model.methods) {
    body.u2(m.access.bits);
    body.u2(pool.intern_utf8(m.name, m.name_hint));
    body.u2(pool.intern_utf8(m.descriptor, m.descriptor_hint));
    std::vector<const RawAttribute*> attrs;
    for (const auto& a : m.attributes) {
      if (a.name == "Code" && !m.code) continue;  // body removed
      attrs.push_back(&a);
    }
    const bool code_slot = std::any_of(attrs.begin(), attrs.end(), [](auto* a) { return a->name == "Code"; });
    const bool exc_slot = std::any_of(attrs.begin(), attrs.end(), [](auto* a) { return a->name == "Exceptions"; });
    RawAttribute code_placeholder{"Code", {}};
    RawAttribute exc_placeholder{"Exceptions", {}};
    if (m.code && !code_slot) attrs.insert(attrs.begin(), &code_placeholder);
    if (!m.exceptions_thrown.empty() && !exc_slot) attrs.push_back(&exc_placeholder);

    body.u2(static_cast<std::uint32_t>(attrs.size()));
    bool wrote_exceptions = false;
    for (const auto* a : attrs) {
      if (a->name == "Code") {
        Bytes payload;
        try {
          payload = encode_code(*m.code, pool);
        } catch (const EncodingOverflow& e) {
          throw EncodingOverflow(model.this_class + "." + m.name + m.descriptor + ": " + e.what());
        }
        write_attribute(body, pool, "Code", payload, a->name_index);
      } else if (a->name == "Exceptions" && !wrote_exceptions) {
        wrote_exceptions = true;
        ByteWriter e;
        e.u2(static_cast<std::uint32_t>(m.exceptions_thrown.size()));
        for (std::size_t k = 0; k < m.exceptions_thrown.size(); ++k)
          e.u2(pool.intern_class(m.exceptions_thrown[k], hint_at(m.exception_hints, k)));
        write_attribute(body, pool, "Exceptions", e.data(), a->name_index);
      } else {
        write_attribute(body, pool, a->name, a->data, a->name_index);
      }
    }
  }

  body.u2(static_cast<std::uint32_t>(model.attributes.size()));
  for (const auto& a : model.attributes) write_attribute(body, pool, a.name, a.data, a.name_index);

  ByteWriter out;
  out.u4(kMagic);
  out.u2(model.minor_version);
  out.u2(model.major_version);
  pool.write(out);
  out.bytes(body.data());
  return std::move(out).take();
}

}  // namespace cfweave::classfile
