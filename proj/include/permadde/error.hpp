#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace permadde {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Evaluation requested outside a function's declared domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// An intermediate or final value was NaN or infinite.
class NonFiniteError : public Error {
public:
    using Error::Error;
};

/// A model violates one of its structural constraints (signs, bounds, lags).
class ModelError : public Error {
public:
    using Error::Error;
};

/// History requested at a time the buffer does not cover.
class HistoryGap : public Error {
public:
    HistoryGap(const std::string& what, double time) : Error(what), time_(time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

/// Integration aborted; carries the failure class, time and component.
class IntegrationError : public Error {
public:
    enum class Kind { positivity, step_bound, max_steps, negative_history, non_finite };

    IntegrationError(Kind kind, const std::string& what, double time = 0.0,
                     std::size_t component = 0)
        : Error(what), kind_(kind), time_(time), component_(component) {}

    Kind kind() const noexcept { return kind_; }
    double time() const noexcept { return time_; }
    std::size_t component() const noexcept { return component_; }

private:
    Kind kind_;
    double time_;
    std::size_t component_;
};

/// Malformed spec/solution/segment document. `path()` is a JSON-pointer-like location.
class SpecError : public Error {
public:
    SpecError(std::string path, const std::string& message)
        : Error(path + ": " + message), path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

}  // namespace permadde
