#pragma once

#include <stdexcept>
#include <string>

namespace ddrop {

// All library failures carry a stable machine-readable code (e.g. "NotCoprime",
// "NoSolution", "PatternsTooFar") plus a human message.  CLI maps codes to exit 1.
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

private:
  std::string code_;
};

[[noreturn]] inline void fail(const std::string& code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool cond, const std::string& code, const std::string& message) {
  if (!cond) fail(code, message);
}

}  // namespace ddrop
