#pragma once

#include <stdexcept>
#include <string>

namespace qmra {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid arguments or violated operation preconditions (CLI exit 2).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Dimension or contract mismatches between cooperating values.
class ContractError : public UsageError {
 public:
  using UsageError::UsageError;
};

/// Graph is disconnected or cannot be kept connected.
class ConnectivityError : public UsageError {
 public:
  using UsageError::UsageError;
};

/// Input matrix is rank deficient where full rank is required.
class DegenerateInputError : public UsageError {
 public:
  using UsageError::UsageError;
};

/// File system failures (CLI exit 3).
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed file contents; message carries field context (CLI exit 3).
class ParseError : public IoError {
 public:
  using IoError::IoError;
};

/// Solver backend failures (CLI exit 4).
class BackendError : public Error {
 public:
  using Error::Error;
};

/// Problem exceeds a backend's hard size cap.
class CapacityError : public BackendError {
 public:
  using BackendError::BackendError;
};

/// Remote solver could not be reached after retries.
class TransportError : public BackendError {
 public:
  using BackendError::BackendError;
};

/// Remote solver replied with an unexpected schema.
class ProtocolError : public BackendError {
 public:
  using BackendError::BackendError;
};

/// Remote solver rejected the configured credentials.
class CredentialError : public BackendError {
 public:
  using BackendError::BackendError;
};

/// Non-finite values or unsolvable linear systems (CLI exit 5).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace qmra
