#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qchimera {

// Invalid argument to a builder or operation (out-of-range site, bad size, ...).
class ParameterError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Operator does not have the structure an algorithm relies on.
class StructuralError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// A numerical procedure could not produce a trustworthy result.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Malformed input file; carries the 1-based line number of the offending line.
class IngestionError : public std::runtime_error {
public:
  IngestionError(const std::string& what, std::size_t line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

// Rejected experiment configuration.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace qchimera
