#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

#include "cfweave/classfile/label.hpp"

namespace cfweave::classfile {

// Verification type of a local slot or stack entry. Int covers boolean,
// byte, char and short. Ref carries an internal class name or an array
// descriptor ("[I", "[Ljava/lang/String;").
class VType {
 public:
  enum class Kind : std::uint8_t { Top, Int, Float, Long, Double, Null, UninitializedThis, Ref, Uninitialized };

  VType() = default;

  static VType top() { return VType(Kind::Top); }
  static VType integer() { return VType(Kind::Int); }
  static VType float_() { return VType(Kind::Float); }
  static VType long_() { return VType(Kind::Long); }
  static VType double_() { return VType(Kind::Double); }
  static VType null() { return VType(Kind::Null); }
  static VType uninitialized_this() { return VType(Kind::UninitializedThis); }
  static VType ref(std::string name) {
    VType t(Kind::Ref);
    t.name_ = std::move(name);
    return t;
  }
  // `site` labels the NEW instruction that created the value.
  static VType uninitialized(Label site) {
    VType t(Kind::Uninitialized);
    t.site_ = site;
    return t;
  }
  // Type of a field descriptor ("I", "Ljava/lang/String;", "[J", ...).
  static VType from_descriptor(std::string_view field_descriptor);

  Kind kind() const noexcept { return kind_; }
  bool is_top() const noexcept { return kind_ == Kind::Top; }
  bool is_category2() const noexcept { return kind_ == Kind::Long || kind_ == Kind::Double; }
  bool is_reference() const noexcept {
    return kind_ == Kind::Ref || kind_ == Kind::Null || kind_ == Kind::Uninitialized ||
           kind_ == Kind::UninitializedThis;
  }
  int size() const noexcept { return is_category2() ? 2 : 1; }

  const std::string& class_name() const noexcept { return name_; }
  Label site() const noexcept { return site_; }

  // Field-descriptor spelling used when the value is passed to a method:
  // primitives map to their exact letter, every reference to java/lang/Object.
  std::string erased_descriptor() const;

  std::string to_string() const;

  bool operator==(const VType&) const = default;

 private:
  explicit VType(Kind k) : kind_(k) {}

  Kind kind_ = Kind::Top;
  std::string name_;
  Label site_;
};

}  // namespace cfweave::classfile
