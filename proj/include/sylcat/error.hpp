#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sylcat {

enum class ErrorCode {
  EmptyWord,
  MalformedBoundary,
  ReservedCharacter,
  UnknownPhone,
  ParseError,
  EmptyCorpus,
  MissingField,
  AllLinesSkipped,
  TooFewWords,
  WordTooShort,
  ShapeMismatch,
  NoTrainableWords,
  AlphabetMismatch,
  ConfigInvalid,
  InvalidArgument,
  FormatError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyWord: return "EmptyWord";
    case ErrorCode::MalformedBoundary: return "MalformedBoundary";
    case ErrorCode::ReservedCharacter: return "ReservedCharacter";
    case ErrorCode::UnknownPhone: return "UnknownPhone";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::AllLinesSkipped: return "AllLinesSkipped";
    case ErrorCode::TooFewWords: return "TooFewWords";
    case ErrorCode::WordTooShort: return "WordTooShort";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NoTrainableWords: return "NoTrainableWords";
    case ErrorCode::AlphabetMismatch: return "AlphabetMismatch";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::FormatError: return "FormatError";
  }
  return "Unknown";
}

/// Every failure raised by the library. `code()` identifies the condition;
/// for file parsing errors `line()` is the 1-based source line and `cause()`
/// the underlying condition (e.g. ParseError caused by MalformedBoundary).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        cause_(code) {}

  Error(ErrorCode code, std::size_t line, ErrorCode cause, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + " at line " + std::to_string(line) +
                           " (" + std::string(to_string(cause)) + "): " + message),
        code_(code),
        cause_(cause),
        line_(line) {}

  ErrorCode code() const noexcept { return code_; }
  ErrorCode cause() const noexcept { return cause_; }
  std::size_t line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  ErrorCode cause_;
  std::size_t line_ = 0;
};

}  // namespace sylcat
