#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cfweave::classfile {

struct MethodDescriptor {
  std::vector<std::string> params;  // field descriptors
  std::string ret;                  // field descriptor or "V"

  // Local slots taken by the parameters (long/double count twice).
  int param_slots() const;
};

// Throws MalformedClass on bad syntax.
MethodDescriptor parse_method_descriptor(std::string_view desc);

// Length of the field descriptor starting at desc[pos].
std::size_t field_descriptor_length(std::string_view desc, std::size_t pos);

inline int descriptor_slots(std::string_view field_desc) {
  return (field_desc == "J" || field_desc == "D") ? 2 : (field_desc == "V" ? 0 : 1);
}

// "java/lang/String" -> "Ljava/lang/String;", arrays unchanged.
std::string class_to_descriptor(std::string_view internal_name_or_array);

// Inverse of class_to_descriptor for reference descriptors.
std::string descriptor_to_class(std::string_view ref_desc);

// "com/example/Aes" -> "com.example.Aes".
std::string dotted(std::string_view internal_name);

}  // namespace cfweave::classfile
