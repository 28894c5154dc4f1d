#pragma once

#include <stdexcept>
#include <string>

namespace sdil {

// Error taxonomy. Library code throws; the CLI maps these onto exit codes.
struct ShapeError : std::runtime_error { using std::runtime_error::runtime_error; };
struct IndexError : std::runtime_error { using std::runtime_error::runtime_error; };
struct NumericError : std::runtime_error { using std::runtime_error::runtime_error; };
struct DomainError : std::runtime_error { using std::runtime_error::runtime_error; };
struct UsageError : std::runtime_error { using std::runtime_error::runtime_error; };
struct ParseError : std::runtime_error { using std::runtime_error::runtime_error; };
struct DataError : std::runtime_error { using std::runtime_error::runtime_error; };
struct ConfigError : std::runtime_error { using std::runtime_error::runtime_error; };
struct SamplingError : std::runtime_error { using std::runtime_error::runtime_error; };
struct CheckpointError : std::runtime_error { using std::runtime_error::runtime_error; };

// Core filtering removed every interaction.
struct EmptyAfterFilterError : DataError { using DataError::DataError; };

// Thrown when a training batch produces a non-finite loss.
struct DivergenceError : std::runtime_error {
  int epoch;
  int batch;
  DivergenceError(int epoch_, int batch_, const std::string& what_)
      : std::runtime_error(what_), epoch(epoch_), batch(batch_) {}
};

}  // namespace sdil
