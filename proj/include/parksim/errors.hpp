#pragma once

#include <stdexcept>
#include <string>

namespace parksim {

  /// Base class of every error raised by the simulator.
  class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
  };

  /// Invalid configuration value (shares, patterns, flags).
  class ConfigError : public Error {
  public:
    using Error::Error;
  };

  /// Malformed input text; carries the 1-based line number when known.
  class ParseError : public Error {
    std::size_t m_line;

  public:
    ParseError(std::string const& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), m_line(line) {}
    std::size_t line() const noexcept { return m_line; }
  };

  /// Well-formed input whose values break a domain invariant.
  class ValidationError : public Error {
  public:
    using Error::Error;
  };

  /// Occupancy bookkeeping would leave [0, capacity]. Signals an engine ordering bug.
  class CapacityViolation : public Error {
  public:
    using Error::Error;
  };

  /// A function was called outside its documented precondition.
  class ContractViolation : public Error {
  public:
    using Error::Error;
  };

  /// A model or feature schema does not cover the request.
  class SchemaError : public Error {
  public:
    using Error::Error;
  };

  class SingularMatrixError : public Error {
    int m_rank;

  public:
    SingularMatrixError(std::string const& what, int rank) : Error(what), m_rank(rank) {}
    int rank() const noexcept { return m_rank; }
  };

  class IoError : public Error {
  public:
    using Error::Error;
  };

}  // namespace parksim
