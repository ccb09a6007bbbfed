#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace spawncphd {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the domain of a mathematical operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Model parameters that violate their invariants (non-PSD noise, bad probabilities, ...).
class InvalidModelError : public Error {
public:
    using Error::Error;
};

/// Numerical breakdown during filtering (singular innovation, vanishing normalizer).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Invalid experiment or scenario configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Per-call diagnostic sink. Owned by the caller, so independent runs never share one.
struct Diagnostics {
    std::vector<std::string> messages;

    void log(std::string message) { messages.push_back(std::move(message)); }
};

inline void log_to(Diagnostics* diag, std::string message) {
    if (diag) diag->log(std::move(message));
}

}  // namespace spawncphd
