"""
Middleware package for the degrad decentralized-optimization lab.
"""

from .error_handler import (
    EXIT_DOMINANCE,
    EXIT_FAILURE,
    EXIT_OK,
    EXIT_REGIME,
    EXIT_USAGE,
    CapabilityError,
    CertificationError,
    ConfigurationError,
    ConvergenceError,
    DegradError,
    DivergenceConditionError,
    DomainError,
    DominanceViolation,
    ErrorHandlerMiddleware,
    NumericalError,
    StepSizeError,
    TopologyError,
    UsageError,
    ValidationError,
    configure_logging,
    log_performance,
    validate_positive,
    validate_shape,
    validate_square_matrix,
    validate_symmetric,
    validate_unit_interval,
)

__all__ = [
    "EXIT_DOMINANCE",
    "EXIT_FAILURE",
    "EXIT_OK",
    "EXIT_REGIME",
    "EXIT_USAGE",
    "CapabilityError",
    "CertificationError",
    "ConfigurationError",
    "ConvergenceError",
    "DegradError",
    "DivergenceConditionError",
    "DomainError",
    "DominanceViolation",
    "ErrorHandlerMiddleware",
    "NumericalError",
    "StepSizeError",
    "TopologyError",
    "UsageError",
    "ValidationError",
    "configure_logging",
    "log_performance",
    "validate_positive",
    "validate_shape",
    "validate_square_matrix",
    "validate_symmetric",
    "validate_unit_interval",
]
