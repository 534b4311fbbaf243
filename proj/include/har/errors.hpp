#pragma once

#include <stdexcept>
#include <string>

namespace har {

// Base for all domain errors raised by the engine. The CLI maps these to
// exit code 1; anything else escaping is a bug.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Incompatible tensor shapes (message names both shapes).
struct DimensionError : Error {
    using Error::Error;
};

// Unreadable or unwritable file / stream.
struct IoError : Error {
    using Error::Error;
};

// Structurally invalid model file: bad magic, unknown version, bad shape table.
struct FormatError : Error {
    using Error::Error;
};

// Model file failed checksum verification (corruption or truncation).
struct ChecksumError : Error {
    using Error::Error;
};

// Non-finite values where finite ones are required (message names the block).
struct NumericError : Error {
    using Error::Error;
};

}  // namespace har
