#pragma once

#include <stdexcept>
#include <string>

namespace sparsefield {

// Error taxonomy shared by the library and the CLI exit-code mapping:
//   ArgumentError -> 2, ParseError -> 3, NumericalError -> 4, anything else -> 5.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Caller passed an invalid argument (bad shape, out-of-range index, ...).
class ArgumentError : public Error {
public:
    explicit ArgumentError(const std::string& msg) : Error(msg) {}
};

// A file or stream could not be parsed.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& msg) : Error(msg) {}
};

// Numerical failure (singularity, degeneracy, non-convergence).
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& msg) : Error(msg) {}
};

class SingularityError : public NumericalError {
public:
    explicit SingularityError(const std::string& msg) : NumericalError(msg) {}
};

class DegeneracyError : public NumericalError {
public:
    explicit DegeneracyError(const std::string& msg) : NumericalError(msg) {}
};

class ConvergenceError : public NumericalError {
public:
    explicit ConvergenceError(const std::string& msg) : NumericalError(msg) {}
};

}  // namespace sparsefield
