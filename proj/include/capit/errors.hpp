#pragma once

#include <stdexcept>
#include <string>

namespace capit {

enum class ErrorKind {
  InvalidInput,
  InvalidConfig,
  InvalidModel,
  NumericalFailure,
  AllCoordinatesKilled,
  DegenerateInput,
  DataError,
};

const char* to_string(ErrorKind kind);

/// Base of every error the library raises. `kind()` drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Which model constraint failed first in validate_model().
enum class ModelViolation { NotPositiveDefinite, NotNormalized, LambdaOutOfRange, DimensionMismatch };

class ModelError : public Error {
 public:
  ModelError(ModelViolation violation, const std::string& what)
      : Error(ErrorKind::InvalidModel, what), violation_(violation) {}
  ModelViolation violation() const noexcept { return violation_; }

 private:
  ModelViolation violation_;
};

enum class Side { Left, Right };

/// Thresholding removed every coordinate of a power-iteration vector.
class AllCoordinatesKilledError : public Error {
 public:
  AllCoordinatesKilledError(Side side, int iteration, const std::string& what)
      : Error(ErrorKind::AllCoordinatesKilled, what), side_(side), iteration_(iteration) {}
  Side side() const noexcept { return side_; }
  int iteration() const noexcept { return iteration_; }

 private:
  Side side_;
  int iteration_;
};

/// Solver failure tied to a single CLIME column.
class ColumnSolveError : public Error {
 public:
  ColumnSolveError(long column, const std::string& what)
      : Error(ErrorKind::NumericalFailure, what), column_(column) {}
  long column() const noexcept { return column_; }

 private:
  long column_;
};

/// CSV/data ingestion failure; line is 1-based, 0 when not tied to a line.
class DataError : public Error {
 public:
  DataError(long line, const std::string& what) : Error(ErrorKind::DataError, what), line_(line) {}
  long line() const noexcept { return line_; }

 private:
  long line_;
};

}  // namespace capit
