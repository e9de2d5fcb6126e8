#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace holotele {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// An operation was applied to a field in the wrong domain.
class UsageError : public Error {
public:
  using Error::Error;
};

class GridMismatch : public Error {
public:
  using Error::Error;
};

/// Kernel invariant violated (canonical identity, type-II symmetry, file contents).
class KernelError : public Error {
public:
  using Error::Error;
};

/// Estimator refused its input (e.g. a single trial gives no fluctuation estimate).
class EstimatorError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

/// Malformed or truncated classical-channel frame stream.
class ProtocolError : public IoError {
public:
  ProtocolError(const std::string& what, std::uint64_t frame_index, std::uint64_t byte_offset)
      : IoError("frame " + std::to_string(frame_index) + " at byte offset " +
                std::to_string(byte_offset) + ": " + what),
        frame_index_(frame_index), byte_offset_(byte_offset) {}

  std::uint64_t frame_index() const noexcept { return frame_index_; }
  std::uint64_t byte_offset() const noexcept { return byte_offset_; }

private:
  std::uint64_t frame_index_;
  std::uint64_t byte_offset_;
};

/// The exact oracle refuses grids too large for dense propagation.
class OracleSizeError : public Error {
public:
  using Error::Error;
};

} // namespace holotele
