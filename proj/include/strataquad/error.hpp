#pragma once

#include <stdexcept>
#include <string>

namespace strataquad {

enum class ErrorKind {
  kInvalidArgument,
  kDomain,
  kDesign,
  kConfig,
  kBudget,
  kOracle,
  kIo,
};

// Single exception type for the library; the kind drives C API status codes
// and CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) fail(kind, what);
}

}  // namespace strataquad
