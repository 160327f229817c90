#pragma once

#include <stdexcept>
#include <string>

namespace gaitseq {

/// Malformed, missing or inconsistent input data (exit code 2 in the CLI).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A non-finite value appeared during forward propagation or training (exit code 3).
class NumericalDivergence : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Model file could not be decoded or does not match the requested architecture.
class ModelFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace gaitseq
