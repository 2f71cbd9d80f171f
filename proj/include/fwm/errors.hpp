#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace fwm {

// Base for every error the simulator raises on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the domain of a physical law (negative power, Γ <= 0, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// Invalid configuration: bad grid, schema violation, missing block.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Spectral propagation left significant energy in the guard bands.
class PropagationError : public Error {
public:
    using Error::Error;
};

// Delay or width could not be read off a pulse.
class MeasurementError : public Error {
public:
    using Error::Error;
};

// Several half-maximum regions: the width is ambiguous.
class AmbiguityError : public MeasurementError {
public:
    AmbiguityError(const std::string& what, std::vector<double> candidates)
        : MeasurementError(what), candidate_widths_ns(std::move(candidates)) {}

    std::vector<double> candidate_widths_ns;
};

class FitError : public Error {
public:
    using Error::Error;
};

// The normal matrix is singular at the solution; `combination` names the
// direction in parameter space the data cannot constrain.
class RankDeficiencyError : public FitError {
public:
    RankDeficiencyError(const std::string& what, std::string combo)
        : FitError(what), combination(std::move(combo)) {}

    std::string combination;
};

class SeedingError : public FitError {
public:
    using FitError::FitError;
};

}  // namespace fwm
