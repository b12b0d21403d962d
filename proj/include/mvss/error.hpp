#pragma once

#include <stdexcept>
#include <string>

namespace mvss {

/// Error with a stable machine-readable code alongside the human message.
/// Codes are short kebab-case tags ("tree-parse", "fixture-miss", ...) so
/// callers can branch without string-matching prose.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

}  // namespace mvss
