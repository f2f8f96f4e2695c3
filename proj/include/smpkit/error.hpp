#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace smpkit {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Precondition on shapes, ranges or set membership violated.
class DomainError : public Error {
public:
    using Error::Error;
};

class SingularResolventError : public Error {
public:
    using Error::Error;
};

/// Non-finite or overflowing coefficient while stepping a forward equation.
class SimulationDivergedError : public Error {
public:
    SimulationDivergedError(std::size_t step, std::size_t path, const std::string& what)
        : Error("simulation diverged at step " + std::to_string(step) + ", path " +
                std::to_string(path) + ": " + what),
          step_(step), path_(path) {}

    std::size_t step() const noexcept { return step_; }
    std::size_t path() const noexcept { return path_; }

private:
    std::size_t step_;
    std::size_t path_;
};

class DegenerateBasisError : public Error {
public:
    using Error::Error;
};

/// Raised when an identity check is fed objects from different ensembles.
class IdentityInvalidError : public Error {
public:
    using Error::Error;
};

/// Convex-gradient condition requested on a nonconvex control set.
class WrongTheoremError : public Error {
public:
    using Error::Error;
};

class StepRuleError : public Error {
public:
    using Error::Error;
};

class OracleBreakdownError : public Error {
public:
    using Error::Error;
};

class LatticeTooSmallError : public Error {
public:
    using Error::Error;
};

class PresetError : public Error {
public:
    using Error::Error;
};

}  // namespace smpkit
