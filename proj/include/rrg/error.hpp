#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rrg {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A point projects outside the grid bounding box.
class OutOfBounds : public Error {
 public:
  using Error::Error;
};

class EmptyRange : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

// All abscissae equal; the least-squares slope is undefined.
class DegenerateX : public Error {
 public:
  using Error::Error;
};

class EmptySubset : public Error {
 public:
  using Error::Error;
};

class ZeroMass : public Error {
 public:
  using Error::Error;
};

class TooFewPoints : public Error {
 public:
  using Error::Error;
};

class IndexOutOfRange : public Error {
 public:
  using Error::Error;
};

// Malformed CSV input. row is the 1-based data row (header excluded), 0 for
// header-level problems.
class SchemaError : public Error {
 public:
  SchemaError(std::size_t row, const std::string& msg)
      : Error(row == 0 ? "header: " + msg
                       : "row " + std::to_string(row) + ": " + msg),
        row_(row) {}

  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

}  // namespace rrg
