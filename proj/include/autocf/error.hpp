#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace autocf {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed CSV or sidecar input. `row` is the 1-based CSV record
/// (the header is record 1), or 0 when the problem is not row-specific.
class InputError : public Error {
 public:
  InputError(const std::string& what, std::size_t row = 0)
      : Error(what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// Syntax error in rule text; `position` is a 0-based byte offset.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " at position " + std::to_string(position)),
        position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Condition exceeds the clause/literal bounds after DNF conversion.
class DnfBoundError : public Error {
 public:
  using Error::Error;
};

/// A column reference does not resolve against the table.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

/// A predicate is applied to a column of the wrong type.
class TypeMismatchError : public Error {
 public:
  using Error::Error;
};

}  // namespace autocf
