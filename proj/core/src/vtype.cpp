#include "cfweave/classfile/vtype.hpp"

#include "cfweave/classfile/descriptor.hpp"
#include "cfweave/error.hpp"

namespace cfweave::classfile {

VType VType::from_descriptor(std::string_view d) {
  if (d.empty()) throw MalformedClass("empty field descriptor");
  switch (d[0]) {
    case 'Z': case 'B': case 'C': case 'S': case 'I': return integer();
    case 'F': return float_();
    case 'J': return long_();
    case 'D': return double_();
    case 'L': case '[': return ref(descriptor_to_class(d));
    default: throw MalformedClass("bad field descriptor: " + std::string(d));
  }
}

std::string VType::erased_descriptor() const {
  switch (kind_) {
    case Kind::Int: return "I";
    case Kind::Float: return "F";
    case Kind::Long: return "J";
    case Kind::Double: return "D";
    default: return "Ljava/lang/Object;";
  }
}

std::string VType::to_string() const {
  switch (kind_) {
    case Kind::Top: return "Top";
    case Kind::Int: return "Int";
    case Kind::Float: return "Float";
    case Kind::Long: return "Long";
    case Kind::Double: return "Double";
    case Kind::Null: return "Null";
    case Kind::UninitializedThis: return "UninitializedThis";
    case Kind::Ref: return "Ref(" + name_ + ")";
    case Kind::Uninitialized: return "Uninitialized(L" + std::to_string(site_.id) + ")";
  }
  return "?";
}

}  // namespace cfweave::classfile
