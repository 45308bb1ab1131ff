#pragma once

#include <stdexcept>
#include <string>

namespace bitbit {

// Base class for every error raised by the library. Callers that only care
// about "something in bitbit failed" catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (CSV cells, encoded records, shapes).
class DataError : public Error {
 public:
  using Error::Error;
};

// A persisted artifact has a schema version this build cannot read.
class VersionError : public Error {
 public:
  using Error::Error;
};

// A configured resource limit (statevector size, table bytes) was exceeded.
class CapacityError : public Error {
 public:
  using Error::Error;
};

}  // namespace bitbit
