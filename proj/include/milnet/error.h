#ifndef MILNET_ERROR_H_
#define MILNET_ERROR_H_

#include <stdexcept>
#include <string>

namespace milnet {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: malformed files, out-of-range labels, bad flags.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public ValidationError {
 public:
  ParseError(const std::string &what, int line)
      : ValidationError("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class FormatError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Operand shapes do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Every position of an attention row is masked out.
class DegenerateMaskError : public Error {
 public:
  using Error::Error;
};

// NaN or infinity reached the optimizer.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace milnet

#endif  // MILNET_ERROR_H_
