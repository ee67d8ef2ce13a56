#pragma once

#include <stdexcept>
#include <string>

namespace costcal {

/// Broad failure categories. The CLI maps `Input` to exit code 2 and
/// everything else to exit code 1.
enum class ErrorKind {
  Input,      // malformed program text, bad flags, invalid declarations
  Analysis,   // unresolved sizes, non-well-founded recurrences, ...
  Domain,     // cost function evaluated outside its domain
  Runtime,    // interpreter failures: unknown predicate, mode violation, ...
  Numeric,    // rank deficiency, insufficient samples
  Concurrency // timing requested while other harness activity is running
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& msg, int line, int column)
      : Error(ErrorKind::Input, std::to_string(line) + ":" +
                                    std::to_string(column) + ": " + msg),
        line_(line),
        column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace costcal
