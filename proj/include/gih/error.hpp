#pragma once

#include <stdexcept>
#include <string>

namespace gih {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ShapeError : Error {
    using Error::Error;
};

struct NotPositiveDefiniteError : Error {
    using Error::Error;
};

struct NotPsdError : Error {
    using Error::Error;
};

struct UndefinedCorrelationError : Error {
    using Error::Error;
};

struct DegenerateLabelingError : Error {
    using Error::Error;
};

struct FormatError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

// Thrown when training produces a non-finite loss; carries the epoch.
struct DivergenceError : Error {
    int epoch;
    DivergenceError(int epoch_, const std::string& msg) : Error(msg), epoch(epoch_) {}
};

}  // namespace gih
