#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace contact_nh {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed expression text. `offset` is the 0-based byte offset of the
/// offending token.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : Error(what + " at byte " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class UnknownFunctionError : public ParseError {
public:
    UnknownFunctionError(const std::string& name, std::size_t offset)
        : ParseError("unknown function '" + name + "'", offset), name_(name) {}
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

class UnboundVariableError : public Error {
public:
    explicit UnboundVariableError(const std::string& name)
        : Error("unbound variable '" + name + "'"), name_(name) {}
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

/// log/sqrt of a negative argument, division by zero, or a real power with a
/// negative base. `node` is the printed subexpression that failed.
class DomainError : public Error {
public:
    DomainError(const std::string& what, const std::string& node)
        : Error(what + " in '" + node + "'"), node_(node) {}
    const std::string& node() const noexcept { return node_; }

private:
    std::string node_;
};

/// Numerical failures. These map to CLI exit code 2.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Singular velocity Hessian or non-invertible contact flat map.
class RegularityError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Singular constraint matrix C, i.e. the reaction distribution meets the
/// tangent space of the constraint submanifold.
class DegeneracyError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Constraint coefficient matrix without full row rank.
class RankError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Invalid model description (bad file, name collision, nonlinear constraint).
class ModelError : public Error {
public:
    explicit ModelError(const std::string& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace contact_nh
