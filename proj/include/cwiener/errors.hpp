#ifndef CWIENER_ERRORS_HPP
#define CWIENER_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace cwiener {

// Base class for everything this library throws on purpose.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct zero_polynomial_error : error {
    using error::error;
};

// Partial fractions requested for a function with a repeated pole.
struct unsupported_multiplicity_error : error {
    using error::error;
};

// A pole sits within tolerance of the imaginary axis; causal/anticausal
// assignment would be arbitrary.
struct marginal_pole_error : error {
    using error::error;
};

struct pole_evaluation_error : error {
    using error::error;
};

struct unsupported_error : error {
    using error::error;
};

struct invalid_psd_error : error {
    using error::error;
};

struct nonfactorizable_error : error {
    using error::error;
};

// Integral of a spectrum with a non-decaying tail.
struct divergence_error : error {
    using error::error;
};

// Measurement rate is zero or negative: the record carries no signal.
struct no_information_error : error {
    using error::error;
};

struct instability_error : error {
    using error::error;
};

// Caller violated a documented precondition (e.g. handed an anticausal
// filter to a routine whose hypothesis requires causality).
struct usage_error : error {
    using error::error;
};

// Back-action/imprecision calibration failed to cancel the forward
// commutator branch; indicates a convention bug in the model.
struct model_inconsistency_error : error {
    using error::error;
};

struct config_error : error {
    using error::error;
};

}  // namespace cwiener

#endif
