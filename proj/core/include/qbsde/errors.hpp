#pragma once

#include <stdexcept>
#include <string>

namespace qbsde {

// Thrown when a regression design matrix is rank deficient and no ridge term
// is available to regularize it.
class SingularSystemError : public std::runtime_error {
public:
    explicit SingularSystemError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when a required exponential moment is infinite or a quadrature /
// sample mean fails its stability check, i.e. the terminal condition does not
// satisfy the integrability the requested operation needs.
class IntegrabilityError : public std::runtime_error {
public:
    explicit IntegrabilityError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when the implicit step of the backward solver fails to converge for
// some (path, step) cell even after the bisection fallback.
class StepFailureError : public std::runtime_error {
public:
    StepFailureError(const std::string& what, long path, int step)
        : std::runtime_error(what), path(path), step(step) {}
    long path;
    int step;
};

// Thrown when an infimal convolution search keeps finding smaller values on
// the boundary of an ever-growing box, so the infimum appears to diverge.
class DivergingInfimumError : public std::runtime_error {
public:
    explicit DivergingInfimumError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when a numerical tolerance cannot be met (root finding, table
// inversion, ODE step control).
class ToleranceError : public std::runtime_error {
public:
    explicit ToleranceError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown on malformed configuration files or unknown keys.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when a scenario's declared standing assumptions fail their sampled
// validation, naming the hypothesis that failed.
class HypothesisError : public std::runtime_error {
public:
    explicit HypothesisError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown by report consolidation when required artifacts are missing.
class ReportError : public std::runtime_error {
public:
    explicit ReportError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when a pathwise consistency assertion between two solver runs fails
// beyond its tolerance (e.g. a dominating run fails to dominate).
class SolverInconsistencyError : public std::runtime_error {
public:
    explicit SolverInconsistencyError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qbsde
