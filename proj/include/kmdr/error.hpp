#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kmdr {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Required column absent or header malformed.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Bad value in the input. row() is the 1-based data row (header excluded),
// or 0 when the problem is not tied to a row.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what, std::size_t row = 0)
      : Error(row == 0 ? what : what + " (row " + std::to_string(row) + ")"),
        row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

// Optimisation or linear-algebra failure that leaves no usable result.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace kmdr
