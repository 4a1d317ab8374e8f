#pragma once

#include <stdexcept>
#include <string>

namespace crowdlabel {

// Malformed or inconsistent input data (annotation files, gold standards).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid or mismatched configuration (hyperparameters, MCMC settings, flags).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An internal invariant was breached; indicates a bug rather than bad input.
class InvariantError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace crowdlabel
