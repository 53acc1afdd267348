#pragma once

#include <stdexcept>
#include <string>

namespace storyboard {

/// Base for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Filesystem or codec failure.
class IoError : public Error {
public:
    using Error::Error;
};

/// Caller violated a documented precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// An external executable exited unsuccessfully; carries its stderr.
class SubprocessError : public Error {
public:
    SubprocessError(const std::string& what, int exit_code, std::string stderr_text)
        : Error(what), exit_code_(exit_code), stderr_(std::move(stderr_text)) {}

    int exit_code() const noexcept { return exit_code_; }
    const std::string& stderr_text() const noexcept { return stderr_; }

private:
    int exit_code_;
    std::string stderr_;
};

// Provider-side failures. TransportError covers a dead or unreachable
// provider; ProtocolError covers a live provider speaking nonsense.
class ProviderError : public Error {
public:
    using Error::Error;
};

class TransportError : public ProviderError {
public:
    using ProviderError::ProviderError;
};

class TimeoutError : public TransportError {
public:
    using TransportError::TransportError;
};

class ProtocolError : public ProviderError {
public:
    using ProviderError::ProviderError;
};

void log_warning(const std::string& message);

}  // namespace storyboard
