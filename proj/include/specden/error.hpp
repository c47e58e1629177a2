#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace specden {

enum class ErrorKind {
    Structural,     // malformed model or input (dimension mismatch, bad field)
    InvalidArgument,
    NonConvergence,
    NumericalDomain,
    Precondition
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class StructuralError : public Error {
public:
    explicit StructuralError(const std::string& what) : Error(ErrorKind::Structural, what) {}
};

class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& what) : Error(ErrorKind::InvalidArgument, what) {}
};

class NumericalDomainError : public Error {
public:
    explicit NumericalDomainError(const std::string& what) : Error(ErrorKind::NumericalDomain, what) {}
};

class PreconditionError : public Error {
public:
    explicit PreconditionError(const std::string& what) : Error(ErrorKind::Precondition, what) {}
};

/// Raised when the fixed-point iteration exhausts its budget. Carries the
/// last iterate so callers can inspect or restart from it.
class NonConvergenceError : public Error {
public:
    NonConvergenceError(const std::string& what, Eigen::VectorXcd delta, Eigen::VectorXcd delta_tilde,
                        double residual, int iterations)
        : Error(ErrorKind::NonConvergence, what),
          delta_(std::move(delta)),
          delta_tilde_(std::move(delta_tilde)),
          residual_(residual),
          iterations_(iterations) {}

    const Eigen::VectorXcd& delta() const noexcept { return delta_; }
    const Eigen::VectorXcd& delta_tilde() const noexcept { return delta_tilde_; }
    double residual() const noexcept { return residual_; }
    int iterations() const noexcept { return iterations_; }

private:
    Eigen::VectorXcd delta_;
    Eigen::VectorXcd delta_tilde_;
    double residual_;
    int iterations_;
};

/// Collects per-point failures of a batched evaluation.
class GridError : public Error {
public:
    struct Failure {
        std::size_t index;
        ErrorKind kind;
        std::string message;
    };

    GridError(ErrorKind kind, const std::string& what, std::vector<Failure> failures)
        : Error(kind, what), failures_(std::move(failures)) {}

    const std::vector<Failure>& failures() const noexcept { return failures_; }

private:
    std::vector<Failure> failures_;
};

} // namespace specden
