#pragma once

#include <stdexcept>
#include <string>

namespace autolab {

/// Base class for all failures raised by the engine.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

struct ParseError : Error {
  explicit ParseError(const std::string& w) : Error("ParseError", w) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error("ConfigError", w) {}
};

struct DuplicateIdError : Error {
  explicit DuplicateIdError(const std::string& w) : Error("DuplicateIdError", w) {}
};

struct EmptyRegistryError : Error {
  explicit EmptyRegistryError(const std::string& w) : Error("EmptyRegistryError", w) {}
};

struct UnknownServiceError : Error {
  explicit UnknownServiceError(const std::string& w) : Error("UnknownServiceError", w) {}
};

struct UnknownTaskError : Error {
  explicit UnknownTaskError(const std::string& w) : Error("UnknownTaskError", w) {}
};

struct NoCapableInstrumentError : Error {
  explicit NoCapableInstrumentError(const std::string& w)
      : Error("NoCapableInstrumentError", w) {}
};

struct ParamOutOfRangeError : Error {
  explicit ParamOutOfRangeError(const std::string& w)
      : Error("ParamOutOfRangeError", w) {}
};

struct InsufficientReagentError : Error {
  explicit InsufficientReagentError(const std::string& w)
      : Error("InsufficientReagentError", w) {}
};

struct IncompatibleProgramsError : Error {
  explicit IncompatibleProgramsError(const std::string& w)
      : Error("IncompatibleProgramsError", w) {}
};

struct UnschedulableError : Error {
  explicit UnschedulableError(const std::string& w) : Error("UnschedulableError", w) {}
};

struct ZeroMakespanError : Error {
  explicit ZeroMakespanError(const std::string& w) : Error("ZeroMakespanError", w) {}
};

struct InfeasibleAllCandidatesError : Error {
  explicit InfeasibleAllCandidatesError(const std::string& w)
      : Error("InfeasibleAllCandidatesError", w) {}
};

struct PayloadTooLargeError : Error {
  explicit PayloadTooLargeError(const std::string& w)
      : Error("PayloadTooLargeError", w) {}
};

struct UnrecoverableStrandError : Error {
  UnrecoverableStrandError(std::size_t index, const std::string& w)
      : Error("UnrecoverableStrandError", w), strand_index(index) {}
  std::size_t strand_index;
};

}  // namespace autolab
