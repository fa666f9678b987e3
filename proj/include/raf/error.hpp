#pragma once

#include <stdexcept>
#include <string>

namespace raf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Index or window arithmetic fell outside a series.
class BoundsError : public Error {
public:
    using Error::Error;
};

/// Input text (CSV cells, dates, config values) could not be parsed.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Inconsistent or invalid configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Matrix shapes disagree.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Numerical failure (singular systems and the like).
class NumericError : public Error {
public:
    using Error::Error;
};

/// The retrieval pool has no admissible candidates.
class EmptyPoolError : public Error {
public:
    using Error::Error;
};

/// Transport to an external process/endpoint failed. Retriable.
class TransportError : public Error {
public:
    TransportError(const std::string& what, int attempts)
        : Error(what + " (after " + std::to_string(attempts) + " attempt(s))"),
          reason_(what),
          attempts_(attempts) {}
    int attempts() const noexcept { return attempts_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    std::string reason_;
    int attempts_;
};

/// A peer sent a frame that does not follow the wire protocol.
class ProtocolError : public Error {
public:
    using Error::Error;
};

/// A peer answered with a well-formed frame that breaks the request contract.
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// Wraps an error raised inside one stage of the retrieve/augment/forecast pipeline.
class PipelineError : public Error {
public:
    PipelineError(std::string stage, const std::string& what)
        : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace raf
