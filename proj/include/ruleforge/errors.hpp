#pragma once

#include <stdexcept>
#include <string>

namespace ruleforge {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bad input data: malformed files, schema mismatches, out-of-domain values.
struct DataError : Error {
  using Error::Error;
};

/// A documented precondition was violated by the caller.
struct ContractError : Error {
  using Error::Error;
};

/// Bad command-line usage (unknown method names, missing flags).
struct UsageError : Error {
  using Error::Error;
};

}  // namespace ruleforge
