#pragma once

#include <stdexcept>
#include <string>

namespace fedsim {

// Shape/length disagreements between vectors, models, datasets.
struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

// NaN/Inf encountered where a finite value is required.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration (bad hyperparameters, malformed config files).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Inputs that violate the round protocol (e.g. missing cost history).
struct ProtocolError : std::runtime_error {
    explicit ProtocolError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fedsim
