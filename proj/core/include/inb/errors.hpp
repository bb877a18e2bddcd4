#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace inb {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values produced or consumed where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A backward pass was requested without a recorded forward pass.
class StateError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Dataset file errors. Each failure mode has its own type so callers and
/// tests can tell a corrupt header from a short file.
class DataError : public Error {
 public:
  using Error::Error;
};
class MissingFileError : public DataError {
 public:
  using DataError::DataError;
};
class BadMagicError : public DataError {
 public:
  using DataError::DataError;
};
class TruncatedFileError : public DataError {
 public:
  using DataError::DataError;
};
class CountMismatchError : public DataError {
 public:
  using DataError::DataError;
};
class LabelRangeError : public DataError {
 public:
  using DataError::DataError;
};
class RecordSizeError : public DataError {
 public:
  using DataError::DataError;
};

/// Model file errors.
class ModelFileError : public Error {
 public:
  using Error::Error;
};
class ModelMagicError : public ModelFileError {
 public:
  using ModelFileError::ModelFileError;
};
class ModelVersionError : public ModelFileError {
 public:
  using ModelFileError::ModelFileError;
};
class ChecksumError : public ModelFileError {
 public:
  using ModelFileError::ModelFileError;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t epoch, std::size_t batch)
      : Error("training diverged (non-finite loss) at epoch " + std::to_string(epoch) +
              ", batch " + std::to_string(batch)),
        epoch_(epoch),
        batch_(batch) {}
  std::size_t epoch() const { return epoch_; }
  std::size_t batch() const { return batch_; }

 private:
  std::size_t epoch_;
  std::size_t batch_;
};

}  // namespace inb
