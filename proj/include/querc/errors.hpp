#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace querc {

// Base of every error raised by the library. The CLI maps it to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A workload-log line that could not be turned into a record.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Bad magic, unsupported version, truncated or inconsistent model container.
class FormatError : public Error {
 public:
  using Error::Error;
};

class KindMismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};

// Query text that tokenizes to nothing, so no embedding can be produced.
class EmptyQueryError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss during training.
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t epoch, std::size_t step, double loss);
};

}  // namespace querc
