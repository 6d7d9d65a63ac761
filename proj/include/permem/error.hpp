#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace permem {

// Base for every failure raised by the engine. Context can be prepended while
// the exception propagates (e.g. "user u1, session 7") without losing the
// dynamic type, so callers can still branch on the failure class.
class Error : public std::exception {
public:
    explicit Error(std::string message) : message_(std::move(message)) {}

    const char* what() const noexcept override { return message_.c_str(); }

    void add_context(const std::string& context) { message_ = context + ": " + message_; }

private:
    std::string message_;
};

// Malformed JSON or otherwise unreadable input.
class ParseError : public Error {
public:
    using Error::Error;
};

// Well-formed input that violates a documented invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Invalid run/backend configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

class BackendError : public Error {
public:
    using Error::Error;
};

class TransportError : public BackendError {
public:
    using BackendError::BackendError;
};

class TimeoutError : public TransportError {
public:
    using TransportError::TransportError;
};

// The scripted mock has no rule for the request.
class NoRuleError : public BackendError {
public:
    using BackendError::BackendError;
};

// Backend output that could not be turned into a usable structure after the
// allowed retries (skeletons, timelines, profiles).
class GenerationError : public Error {
public:
    using Error::Error;
};

}  // namespace permem
