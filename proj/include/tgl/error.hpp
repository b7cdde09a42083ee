#pragma once

#include <stdexcept>
#include <string>

namespace tgl {

// Base class for all errors raised by the library.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid configuration value (zero bin count, bad probability, ...).
struct ConfigError : Error {
  using Error::Error;
};

// Unreadable or unwritable file / stream.
struct IoError : Error {
  using Error::Error;
};

// Malformed input data past the tolerated threshold.
struct FormatError : Error {
  using Error::Error;
};

// Matrix dimension mismatch.
struct ShapeError : Error {
  using Error::Error;
};

// API contract violation (unknown node id, stale trace, ...).
struct ContractError : Error {
  using Error::Error;
};

// Snapshot applied out of order.
struct SequencingError : Error {
  using Error::Error;
};

// Lookup of an id that was never indexed.
struct LookupError : Error {
  using Error::Error;
};

}  // namespace tgl
