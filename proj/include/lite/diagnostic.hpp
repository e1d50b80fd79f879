#pragma once

#include <cstddef>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lite {

enum class Severity { Error, Warning };

struct Location {
  std::string path;
  std::size_t line = 0;  // 1-based; 0 when the item has no textual origin

  friend bool operator==(const Location&, const Location&) = default;
};

struct Diagnostic {
  Severity severity = Severity::Error;
  std::string code;
  std::string message;
  Location location;

  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

using Diagnostics = std::vector<Diagnostic>;

inline const char* to_string(Severity s) {
  return s == Severity::Error ? "error" : "warning";
}

// `path:line: severity code message`
std::string format_diagnostic(const Diagnostic& d);

inline bool has_errors(const Diagnostics& ds) {
  for (const auto& d : ds)
    if (d.severity == Severity::Error) return true;
  return false;
}

inline std::size_t count_code(const Diagnostics& ds, std::string_view code) {
  std::size_t n = 0;
  for (const auto& d : ds)
    if (d.code == code) ++n;
  return n;
}

/// Error raised by runtime operations. `code()` mirrors the error names used
/// throughout the toolkit (NoMatch, MissingTarget, SessionEnded, ...) and is
/// what the service maps onto API error codes.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

}  // namespace lite
