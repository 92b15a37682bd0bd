#include "loec/error.hpp"

namespace loec {

std::string_view error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kShape: return "E_SHAPE";
    case ErrorCode::kDegenerate: return "E_DEGENERATE";
    case ErrorCode::kIo: return "E_IO";
    case ErrorCode::kFormat: return "E_FORMAT";
    case ErrorCode::kEmptyFg: return "E_EMPTY_FG";
    case ErrorCode::kEmptyBg: return "E_EMPTY_BG";
    case ErrorCode::kPatchDiv: return "E_PATCH_DIV";
    case ErrorCode::kKTooLarge: return "E_K_TOO_LARGE";
    case ErrorCode::kConfig: return "E_CONFIG";
  }
  return "E_UNKNOWN";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_name(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace loec
