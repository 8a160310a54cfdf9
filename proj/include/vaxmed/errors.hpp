#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace vaxmed {

// Error categories double as CLI exit codes: 2 parse, 3 validation,
// 4 precondition, 5 internal.
enum class ErrorCategory { parse = 2, validation = 3, precondition = 4, internal = 5 };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, std::string message)
      : std::runtime_error(std::move(message)), category_(category) {}
  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class ParseError : public Error {
 public:
  explicit ParseError(std::string message) : Error(ErrorCategory::parse, std::move(message)) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::string message)
      : Error(ErrorCategory::validation, std::move(message)) {}
};

class PreconditionError : public Error {
 public:
  explicit PreconditionError(std::string message)
      : Error(ErrorCategory::precondition, std::move(message)) {}
};

class InternalError : public Error {
 public:
  explicit InternalError(std::string message)
      : Error(ErrorCategory::internal, std::move(message)) {}
};

}  // namespace vaxmed
