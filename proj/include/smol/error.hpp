#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace smol {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A model or operation was handed parameters outside its admissible range.
class ParameterError : public Error {
public:
    using Error::Error;
};

class IndexError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

/// A declared envelope does not dominate the kernel on the scanned grid.
class CertificationError : public Error {
public:
    CertificationError(const std::string& what, std::size_t k, std::size_t l)
        : Error(what), k_(k), l_(l) {}
    std::size_t k() const noexcept { return k_; }
    std::size_t l() const noexcept { return l_; }

private:
    std::size_t k_;
    std::size_t l_;
};

/// Step size collapsed below the underflow threshold.
class StiffnessError : public Error {
public:
    StiffnessError(const std::string& what, double t, std::size_t component)
        : Error(what), t_(t), component_(component) {}
    double t() const noexcept { return t_; }
    /// 1-based cluster size with the largest scaled local error at failure.
    std::size_t component() const noexcept { return component_; }

private:
    double t_;
    std::size_t component_;
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, std::vector<double> history)
        : Error(what), history_(std::move(history)) {}
    const std::vector<double>& residual_history() const noexcept { return history_; }

private:
    std::vector<double> history_;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

class ToleranceError : public Error {
public:
    using Error::Error;
};

} // namespace smol
