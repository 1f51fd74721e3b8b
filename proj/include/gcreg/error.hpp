#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gcreg {

enum class ErrorCode {
  kParameter = 1,
  kDegenerate,
  kNoConsensus,
  kParse,
  kIo,
  kUndefinedMetric,
  kNonFinite,
  kValidation,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by the cloud readers. Carries the byte offset into the file and the
/// 1-based line number (0 when the failure is inside a binary payload).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t byte_offset, std::size_t line)
      : Error(ErrorCode::kParse, what + " (byte " + std::to_string(byte_offset) +
                                     ", line " + std::to_string(line) + ")"),
        detail_(what),
        byte_offset_(byte_offset),
        line_(line) {}

  /// Message without the position suffix.
  const std::string& detail() const noexcept { return detail_; }

  std::size_t byte_offset() const noexcept { return byte_offset_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string detail_;
  std::size_t byte_offset_;
  std::size_t line_;
};

inline void require(bool cond, const std::string& msg,
                    ErrorCode code = ErrorCode::kParameter) {
  if (!cond) throw Error(code, msg);
}

}  // namespace gcreg
