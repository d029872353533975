#pragma once

#include <stdexcept>
#include <string>

namespace gips {

enum class Errc {
  invalid_argument,
  io,
  format,
  size_mismatch,
  non_finite,
  shape_mismatch,
  contract,
  degenerate,
};

const char* to_string(Errc code) noexcept;

// All library failures surface as gips::Error; code() lets callers map them
// onto exit statuses without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool condition, Errc code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace gips
