#pragma once

#include <stdexcept>
#include <string>

namespace tabletop {

/// Base for every error thrown across module boundaries.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller violated an operation's precondition (bad argument, wrong state).
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Lookup of an id/label/key that does not exist.
class NotFoundError : public Error {
public:
    using Error::Error;
};

/// Malformed configuration or registry content.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Network or service failure talking to an external model/ASR/TTS/detector endpoint.
class TransportError : public Error {
public:
    TransportError(const std::string& what, int status = 0, int retry_after_s = -1)
        : Error(what), status_(status), retry_after_s_(retry_after_s) {}

    int status() const noexcept { return status_; }
    /// Seconds from a Retry-After header, or -1 when the service sent none.
    int retry_after() const noexcept { return retry_after_s_; }

private:
    int status_;
    int retry_after_s_;
};

}  // namespace tabletop
