#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace elastic {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid ranges, limits or configuration keys.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Model construction failed: missing rewards, bad weights.
class InstantiationError : public Error {
public:
    using Error::Error;
};

// No measurements available to answer a request.
class NoDataError : public Error {
public:
    using Error::Error;
};

// A builder or solver invariant was broken (cyclic graph, unknown state).
class InternalError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

} // namespace elastic
