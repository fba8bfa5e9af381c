#pragma once

#include <stdexcept>
#include <string>

namespace hwy {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Vehicle placement impossible under the configured gaps.
class SpawnError : public Error {
public:
    using Error::Error;
};

// Unknown or dead vehicle / agent id.
class LookupError : public Error {
public:
    using Error::Error;
};

// Caller broke a precondition (wrong action keys, shape mismatch, ...).
class ContractError : public Error {
public:
    using Error::Error;
};

// Non-finite loss or parameters during optimization.
class TrainingFault : public Error {
public:
    using Error::Error;
};

// Checkpoint or config file could not be read.
class LoadError : public Error {
public:
    using Error::Error;
};

}  // namespace hwy
