#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace semirend {

// Root of every error thrown by the library. Catch this at tool boundaries.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

class CorruptMask : public Error {
public:
    using Error::Error;
};

// Malformed or schema-violating document. `where` names the file and/or the
// JSON path of the offending field.
class ParseError : public Error {
public:
    ParseError(const std::string& where, const std::string& what)
        : Error(where + ": " + what), where_(where) {}
    const std::string& where() const noexcept { return where_; }

private:
    std::string where_;
};

class UnsupportedShape : public Error {
public:
    using Error::Error;
};

class UnknownClass : public Error {
public:
    using Error::Error;
};

class UnsupportedFormat : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class TrainingDiverged : public Error {
public:
    explicit TrainingDiverged(std::size_t step)
        : Error("training diverged at step " + std::to_string(step)), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

}  // namespace semirend
