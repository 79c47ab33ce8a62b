#pragma once

#include <stdexcept>
#include <string>

namespace kpp {

/// Precondition on an argument violated (speed below minimal speed, query outside a zone, ...).
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

/// Requested value lies outside what a table or grid covers.
struct RangeError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

/// Base for failures of a numerical procedure.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct AccuracyError : NumericalError { using NumericalError::NumericalError; };
struct StabilityError : NumericalError { using NumericalError::NumericalError; };
struct ShootingError : NumericalError { using NumericalError::NumericalError; };
struct DegenerateFitError : NumericalError { using NumericalError::NumericalError; };
struct TuningError : NumericalError { using NumericalError::NumericalError; };
struct ResolutionError : NumericalError { using NumericalError::NumericalError; };

/// Bad user configuration (unknown key, hypothesis of a scenario not met).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace kpp
