#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bda {

enum class ErrorKind {
  parse,       // malformed input text (CSV cell, prior string, expression)
  schema,      // input does not match the declared schema
  spec,        // request references something that does not exist
  kind,        // operation applied to a column of the wrong kind
  config,      // configuration value outside its allowed range
  dependency,  // pipeline step run before the step it depends on
  domain,      // argument outside the mathematical domain
  data,        // data cannot support the requested computation
  degenerate,  // zero variance or similar degeneracy
  runtime,     // anything else that goes wrong while running
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Library error carrying a machine-readable kind.
///
/// Validation kinds (parse, schema, spec, kind, config, dependency) map to CLI
/// exit code 1; the rest map to exit code 2.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  bool is_validation() const noexcept;

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::parse: return "parse";
    case ErrorKind::schema: return "schema";
    case ErrorKind::spec: return "spec";
    case ErrorKind::kind: return "kind";
    case ErrorKind::config: return "config";
    case ErrorKind::dependency: return "dependency";
    case ErrorKind::domain: return "domain";
    case ErrorKind::data: return "data";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::runtime: return "runtime";
  }
  return "runtime";
}

inline bool Error::is_validation() const noexcept {
  switch (kind_) {
    case ErrorKind::parse:
    case ErrorKind::schema:
    case ErrorKind::spec:
    case ErrorKind::kind:
    case ErrorKind::config:
    case ErrorKind::dependency:
      return true;
    default:
      return false;
  }
}

}  // namespace bda
