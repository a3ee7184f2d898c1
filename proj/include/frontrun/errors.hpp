#pragma once

#include <stdexcept>
#include <string>

namespace frontrun {

// Exit-code mapping used by the CLI: 1 = config, 2 = IO, 3 = numeric.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed arguments to an otherwise valid computation (grid mismatch,
// non-probability weights, out-of-domain times).
struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

}  // namespace frontrun
