#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace loec {

enum class ErrorCode {
  kShape,
  kDegenerate,
  kIo,
  kFormat,
  kEmptyFg,
  kEmptyBg,
  kPatchDiv,
  kKTooLarge,
  kConfig,
};

/// Stable identifier used on stderr and in logs, e.g. "E_SHAPE".
std::string_view error_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace loec
