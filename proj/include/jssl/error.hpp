#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace jssl {

// Maps onto the CLI exit codes: usage -> 2, data -> 3, numerical -> 4.
enum class ErrorKind { usage, data, numerical };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InvalidConfiguration : public Error {
 public:
  explicit InvalidConfiguration(const std::string& what) : Error(ErrorKind::usage, what) {}
};

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row)
      : Error(ErrorKind::data, "row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class EmptyInputError : public Error {
 public:
  explicit EmptyInputError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class OutOfRangeError : public Error {
 public:
  explicit OutOfRangeError(const std::string& what) : Error(ErrorKind::data, what) {}
};

// Model fitting failed. `trace` holds one line per optimizer iteration when available.
class FitError : public Error {
 public:
  FitError(const std::string& what, std::vector<std::string> trace = {})
      : Error(ErrorKind::numerical, what), trace_(std::move(trace)) {}
  const std::vector<std::string>& trace() const noexcept { return trace_; }

 private:
  std::vector<std::string> trace_;
};

class PositivityError : public Error {
 public:
  PositivityError(const std::string& what, std::size_t observation)
      : Error(ErrorKind::numerical, what), observation_(observation) {}
  std::size_t observation() const noexcept { return observation_; }

 private:
  std::size_t observation_;
};

class SelectionError : public Error {
 public:
  SelectionError(const std::string& what, std::vector<std::string> diagnostics)
      : Error(ErrorKind::numerical, what), diagnostics_(std::move(diagnostics)) {}
  const std::vector<std::string>& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::vector<std::string> diagnostics_;
};

// A metric is undefined for the given data, e.g. an IPA with a zero null Brier score.
class UndefinedMetricError : public Error {
 public:
  explicit UndefinedMetricError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

class CalibrationError : public Error {
 public:
  explicit CalibrationError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

}  // namespace jssl
