#pragma once

#include <stdexcept>
#include <string>

namespace hsjp {

// Base class for everything this library throws on purpose. The C API layer
// maps each subclass to a stable error code.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad argument / violated precondition.
class ArgError : public Error {
public:
    explicit ArgError(const std::string& what) : Error(what) {}
};

// Filesystem / stream failures.
class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(what) {}
};

// Malformed input bytes or text (image streams, config files, corpora).
class ParseError : public Error {
public:
    explicit ParseError(const std::string& what) : Error(what) {}
};

// Invalid or inconsistent training configuration.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

// Tensor / checkpoint shape mismatches.
class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& what) : Error(what) {}
};

}  // namespace hsjp
