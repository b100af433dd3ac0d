#ifndef VEE_ERROR_HPP
#define VEE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace vee {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Arguments violate a documented precondition (bad dimensions, empty input...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Attempt to register something that already exists.
class Conflict : public Error {
 public:
  using Error::Error;
};

// Caller broke an ordering or lifecycle contract (e.g. unsorted match stream).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

enum class LoadErrc {
  io,
  truncated,
  bad_magic,
  version_mismatch,
  checksum,
  corrupt,
};

inline const char* to_string(LoadErrc code) {
  switch (code) {
    case LoadErrc::io: return "io";
    case LoadErrc::truncated: return "truncated";
    case LoadErrc::bad_magic: return "bad magic";
    case LoadErrc::version_mismatch: return "version mismatch";
    case LoadErrc::checksum: return "checksum mismatch";
    case LoadErrc::corrupt: return "corrupt";
  }
  return "unknown";
}

class LoadError : public Error {
 public:
  LoadError(LoadErrc code, const std::string& what)
      : Error(std::string(to_string(code)) + ": " + what), code_(code) {}

  LoadErrc code() const noexcept { return code_; }

 private:
  LoadErrc code_;
};

}  // namespace vee

#endif  // VEE_ERROR_HPP
