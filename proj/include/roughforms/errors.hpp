#pragma once

#include <stdexcept>
#include <string>

namespace roughforms {

/// Base class for all library errors. `kind()` is a stable machine-readable tag.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

#define ROUGHFORMS_ERROR(Name)                                                  \
    class Name : public Error {                                                 \
    public:                                                                     \
        explicit Name(const std::string& what) : Error(#Name, what) {}          \
    };

ROUGHFORMS_ERROR(DegenerateSimplex)
ROUGHFORMS_ERROR(UnsupportedDimension)
ROUGHFORMS_ERROR(BudgetExceeded)
ROUGHFORMS_ERROR(NoConvergence)
ROUGHFORMS_ERROR(NotASubdivision)
ROUGHFORMS_ERROR(DegenerateFit)
ROUGHFORMS_ERROR(ExponentViolation)
ROUGHFORMS_ERROR(QuadratureBudget)
ROUGHFORMS_ERROR(TruncationTail)
ROUGHFORMS_ERROR(InsufficientSamples)
ROUGHFORMS_ERROR(UnknownIdentifier)
ROUGHFORMS_ERROR(NotDifferentiable)
ROUGHFORMS_ERROR(DomainError)
ROUGHFORMS_ERROR(InvalidArgument)

#undef ROUGHFORMS_ERROR

class SyntaxError : public Error {
public:
    SyntaxError(const std::string& msg, int line, int column)
        : Error("SyntaxError", msg + " at line " + std::to_string(line) + ", column " +
                                   std::to_string(column)),
          line_(line), column_(column) {}
    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

}  // namespace roughforms
