#pragma once

#include <stdexcept>
#include <string>

namespace vmlab {

enum class ErrorKind { domain, validation, runtime, precondition };

/// Base of every error thrown by the library. Carries the module and
/// operation that raised it so the CLI can emit a machine-readable record.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string module, std::string op, const std::string& what)
      : std::runtime_error(what), kind_(kind), module_(std::move(module)), op_(std::move(op)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& module() const noexcept { return module_; }
  const std::string& op() const noexcept { return op_; }

 private:
  ErrorKind kind_;
  std::string module_;
  std::string op_;
};

class DomainError : public Error {
 public:
  DomainError(std::string module, std::string op, const std::string& what)
      : Error(ErrorKind::domain, std::move(module), std::move(op), what) {}
};

class ValidationError : public Error {
 public:
  ValidationError(std::string module, std::string op, const std::string& what)
      : Error(ErrorKind::validation, std::move(module), std::move(op), what) {}
};

class RuntimeFailure : public Error {
 public:
  RuntimeFailure(std::string module, std::string op, const std::string& what)
      : Error(ErrorKind::runtime, std::move(module), std::move(op), what) {}
};

class PreconditionError : public Error {
 public:
  PreconditionError(std::string module, std::string op, const std::string& what)
      : Error(ErrorKind::precondition, std::move(module), std::move(op), what) {}
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::domain: return "domain";
    case ErrorKind::validation: return "validation";
    case ErrorKind::runtime: return "runtime";
    case ErrorKind::precondition: return "precondition";
  }
  return "unknown";
}

}  // namespace vmlab
