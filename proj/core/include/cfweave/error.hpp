#pragma once

#include <stdexcept>
#include <string>

namespace cfweave {

// Root of every error the toolkit throws. The concrete type names the
// failure class; what() carries the human-readable detail.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// classfile
class MalformedClass : public Error {
 public:
  using Error::Error;
};
class UnsupportedVersion : public Error {
 public:
  using Error::Error;
};
class EncodingOverflow : public Error {
 public:
  using Error::Error;
};
class PoolOverflow : public Error {
 public:
  using Error::Error;
};
class ArchiveError : public Error {
 public:
  using Error::Error;
};
class IoError : public Error {
 public:
  using Error::Error;
};

// cfg
class MalformedCode : public Error {
 public:
  using Error::Error;
};

// analysis
class TypeConflict : public Error {
 public:
  using Error::Error;
};
class ResolutionFailure : public Error {
 public:
  using Error::Error;
};

// weaver
class UnavailableValue : public Error {
 public:
  using Error::Error;
};
class CategoryMismatch : public Error {
 public:
  using Error::Error;
};
class RegistrationError : public Error {
 public:
  using Error::Error;
};

// Raised at finalize. Always names the method it failed on.
class WeaveError : public Error {
 public:
  WeaveError(std::string method, const std::string& detail)
      : Error(method + ": " + detail), method_(std::move(method)) {}

  const std::string& method() const noexcept { return method_; }

 private:
  std::string method_;
};

}  // namespace cfweave
