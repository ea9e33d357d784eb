#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace encmap {

enum class ErrorKind {
  io,
  format,
  corruption,
  validation,
  degenerate_input,
  numerical,
  resource_limit,
  shape,
  parameter,
  comparability,
  lookup,
  undefined_correlation,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; `kind()` distinguishes the failure class.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace encmap
