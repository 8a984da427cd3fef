#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace depshap {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Normal matrix of the weighted least squares problem is singular.
class DegenerateDesignError : public Error {
 public:
  DegenerateDesignError(const std::string& what, double condition_number)
      : Error(what), condition_number_(condition_number) {}
  double condition_number() const { return condition_number_; }

 private:
  double condition_number_;
};

class IncompleteTableError : public Error {
 public:
  using Error::Error;
};

// A model evaluation failed; carries the synthetic row that triggered it.
class PredictorError : public Error {
 public:
  PredictorError(const std::string& what, std::vector<double> row)
      : Error(what), row_(std::move(row)) {}
  const std::vector<double>& row() const { return row_; }

 private:
  std::vector<double> row_;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Input data does not match the expected schema (CSV columns, config keys).
class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace depshap
