#pragma once

#include <stdexcept>
#include <string>

namespace glyphforge {

/// Base of all library errors. Subclasses map onto the CLI exit codes
/// (see exit_code_for).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor/layer dimension mismatch.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration value (bad dropout rate, shape-recursion underflow, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Invalid payload data (label out of range, empty dataset, bad manifest row).
class DataError : public Error {
public:
    using Error::Error;
};

/// Dataset directory tree does not follow the root/<letter>/ layout.
class LayoutError : public Error {
public:
    using Error::Error;
};

/// Filesystem or codec failure.
class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed model file (bad magic, version, truncation).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Model file parsed but is internally inconsistent with its config.
class IntegrityError : public Error {
public:
    using Error::Error;
};

/// Operation called in the wrong order (backward before forward).
class StateError : public Error {
public:
    using Error::Error;
};

/// Non-finite values where finite ones are required (NaN loss/gradients).
class NumericError : public Error {
public:
    using Error::Error;
};

/// CLI exit-code convention: 0 ok, 1 internal, 2 usage/layout, 3 I/O, 4 numeric.
inline int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const NumericError*>(&e)) return 4;
    if (dynamic_cast<const IoError*>(&e)) return 3;
    if (dynamic_cast<const FormatError*>(&e)) return 3;
    if (dynamic_cast<const IntegrityError*>(&e)) return 3;
    if (dynamic_cast<const LayoutError*>(&e)) return 2;
    if (dynamic_cast<const ConfigError*>(&e)) return 2;
    if (dynamic_cast<const DataError*>(&e)) return 2;
    if (dynamic_cast<const ShapeError*>(&e)) return 2;
    return 1;
}

} // namespace glyphforge
