#pragma once

#include <stdexcept>
#include <string>

namespace ihards {

// Error taxonomy, aligned with the CLI exit-code contract:
//   0 success, 2 configuration, 3 data, 4 numeric.
// Data errors cover anything wrong with bytes on disk (parsing, structure,
// container corruption, shape mismatches, exhausted sampling pools).

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed content inside an otherwise readable file (bad token, wrong
// field count). Messages carry file/line or row/column positions.
class ParseError : public DataError {
public:
    using DataError::DataError;
};

// Missing files, length mismatches between paired files, absent classes.
class StructuralError : public DataError {
public:
    using DataError::DataError;
};

// Dimension disagreements between in-memory objects.
class ShapeError : public DataError {
public:
    using DataError::DataError;
};

// A sampling pool cannot satisfy a without-replacement draw.
class CapacityError : public DataError {
public:
    using DataError::DataError;
};

// Bad magic, unsupported version, or truncation in a binary container.
class FormatError : public DataError {
public:
    using DataError::DataError;
};

// A source label outside the label map's domain.
class MappingError : public DataError {
public:
    using DataError::DataError;
};

// Non-finite values produced during training or optimization.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace ihards
