#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace radctl {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Array sizes disagree with the grid they are supposed to live on.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A point or parameter lies outside the domain where an operation is defined.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A caller-side contract was violated (Dirichlet data, field role, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Data that should satisfy an identity does not (e.g. z~(0) != 0).
class InconsistencyError : public Error {
public:
    using Error::Error;
};

/// Setup or configuration failed validation. `field()` names the offending
/// entry using a dotted path such as `physical.b`.
class ValidationError : public Error {
public:
    ValidationError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// A time-stepper produced non-finite values.
class InstabilityError : public Error {
public:
    InstabilityError(const std::string& what, int suggested_n, int suggested_m)
        : Error(what + " (try N=" + std::to_string(suggested_n) + ", M=" +
                std::to_string(suggested_m) + ")"),
          suggested_n_(suggested_n),
          suggested_m_(suggested_m) {}

    int suggested_n() const noexcept { return suggested_n_; }
    int suggested_m() const noexcept { return suggested_m_; }

private:
    int suggested_n_;
    int suggested_m_;
};

/// An iterative method hit its cap. Carries the residual history.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, std::vector<double> history)
        : Error(what), history_(std::move(history)) {}

    const std::vector<double>& history() const noexcept { return history_; }

private:
    std::vector<double> history_;
};

} // namespace radctl
