#include "cfweave/classfile/descriptor.hpp"

#include <algorithm>

#include "cfweave/error.hpp"

namespace cfweave::classfile {

std::size_t field_descriptor_length(std::string_view desc, std::size_t pos) {
  std::size_t i = pos;
  while (i < desc.size() && desc[i] == '[') ++i;
  if (i >= desc.size()) throw MalformedClass("truncated descriptor: " + std::string(desc));
  switch (desc[i]) {
    case 'B': case 'C': case 'D': case 'F': case 'I': case 'J': case 'S': case 'Z':
      return i + 1 - pos;
    case 'L': {
      const auto semi = desc.find(';', i);
      if (semi == std::string_view::npos) throw MalformedClass("unterminated class descriptor: " + std::string(desc));
      return semi + 1 - pos;
    }
    default:
      throw MalformedClass("bad descriptor: " + std::string(desc));
  }
}

MethodDescriptor parse_method_descriptor(std::string_view desc) {
  if (desc.empty() || desc[0] != '(') throw MalformedClass("bad method descriptor: " + std::string(desc));
  MethodDescriptor out;
  std::size_t i = 1;
  while (i < desc.size() && desc[i] != ')') {
    const auto n = field_descriptor_length(desc, i);
    out.params.emplace_back(desc.substr(i, n));
    i += n;
  }
  if (i >= desc.size()) throw MalformedClass("bad method descriptor: " + std::string(desc));
  ++i;
  if (i < desc.size() && desc[i] == 'V' && i + 1 == desc.size()) {
    out.ret = "V";
  } else {
    const auto n = field_descriptor_length(desc, i);
    if (i + n != desc.size()) throw MalformedClass("bad method descriptor: " + std::string(desc));
    out.ret = std::string(desc.substr(i, n));
  }
  return out;
}

int MethodDescriptor::param_slots() const {
  int n = 0;
  for (const auto& p : params) n += descriptor_slots(p);
  return n;
}

std::string class_to_descriptor(std::string_view name) {
  if (!name.empty() && name[0] == '[') return std::string(name);
  return "L" + std::string(name) + ";";
}

std::string descriptor_to_class(std::string_view d) {
  if (d.size() >= 2 && d[0] == 'L' && d.back() == ';') return std::string(d.substr(1, d.size() - 2));
  return std::string(d);
}

std::string dotted(std::string_view internal_name) {
  std::string s(internal_name);
  std::replace(s.begin(), s.end(), '/', '.');
  return s;
}

}  // namespace cfweave::classfile
