#pragma once

#include <stdexcept>
#include <string>

namespace cpwres {

enum class ErrorKind {
  Domain,
  NegativeKineticInductance,
  InvalidSweep,
  NoResonanceFound,
  DegenerateGeometry,
  NonConvergence,
  NonPhysicalScattering,
  IllConditioned,
  Parse,
  UnsupportedFormat,
  DuplicateFrequency,
  Config,
  FixedPointDivergence,
  Usage,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Parse failures carry the 1-based line number of the offending input line
// (0 when the problem is not tied to a line, e.g. a missing header).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(ErrorKind::Parse, format(what, line)), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& what, std::size_t line) {
    return line ? "line " + std::to_string(line) + ": " + what : what;
  }
  std::size_t line_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace cpwres
