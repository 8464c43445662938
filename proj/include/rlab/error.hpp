#pragma once

#include <stdexcept>
#include <string>

namespace rlab {

// Base class for all library errors. Subtypes exist so callers (CLI, tests)
// can map failure classes to exit codes without string matching.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor shape / dimension mismatch. Message names the offending shapes.
struct DimensionError : Error {
    using Error::Error;
};

// Invalid scalar argument (axis out of range, bad probability, ...).
struct ArgumentError : Error {
    using Error::Error;
};

// Misuse of the autodiff tape (double backward, foreign value, dead tape).
struct TapeError : Error {
    using Error::Error;
};

// Invalid configuration (config file, domain spec, schedule, ...).
struct ConfigError : Error {
    using Error::Error;
};

// Checkpoint file missing or malformed.
struct CheckpointError : Error {
    using Error::Error;
};

// Data file problems (feature files, manifests, CSVs).
struct IoError : Error {
    using Error::Error;
};

// Training loss went non-finite or ran away.
struct DivergenceError : Error {
    using Error::Error;
};

// CTC target cannot be aligned within the given number of frames.
struct InfeasibleAlignmentError : Error {
    using Error::Error;
};

// Optimizer step requested before gradients were populated.
struct MissingGradientError : Error {
    using Error::Error;
};

// WER requested against an empty normalized reference.
struct UndefinedWerError : Error {
    using Error::Error;
};

// A parameter marked frozen changed during training.
struct FrozenViolationError : Error {
    using Error::Error;
};

}  // namespace rlab
