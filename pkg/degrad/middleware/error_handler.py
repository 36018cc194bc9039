"""
Error handling layer for the degrad decentralized-optimization lab.
Provides the typed error hierarchy, structured logging setup, input validators
and the command wrapper that turns failures into documented exit codes.
"""

import functools
import logging
import time
import traceback
import uuid
from datetime import datetime, timezone
from typing import Any, Callable, Dict, Optional, Sequence

import numpy as np
import structlog


# Configure structured logging
structlog.configure(
    processors=[
        structlog.stdlib.filter_by_level,
        structlog.stdlib.add_logger_name,
        structlog.stdlib.add_log_level,
        structlog.stdlib.PositionalArgumentsFormatter(),
        structlog.processors.TimeStamper(fmt="iso"),
        structlog.processors.StackInfoRenderer(),
        structlog.dev.ConsoleRenderer()
    ],
    wrapper_class=structlog.stdlib.BoundLogger,
    logger_factory=structlog.stdlib.LoggerFactory(),
    cache_logger_on_first_use=True,
)

logger = structlog.get_logger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_DOMINANCE = 2
EXIT_REGIME = 3
EXIT_USAGE = 64


def configure_logging(level: str = "INFO", json_logs: bool = False) -> None:
    """Route stdlib and structlog output through one handler at the given level."""

    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(message)s",
        force=True,
    )
    renderer = structlog.processors.JSONRenderer() if json_logs else structlog.dev.ConsoleRenderer()
    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.stdlib.PositionalArgumentsFormatter(),
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            renderer,
        ],
        wrapper_class=structlog.stdlib.BoundLogger,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=False,
    )


class DegradError(Exception):
    """Base error with context, an exit code and user-facing messaging."""

    def __init__(
        self,
        message: str,
        error_code: str,
        exit_code: int = EXIT_FAILURE,
        details: Optional[Dict[str, Any]] = None,
        user_message: Optional[str] = None
    ):
        super().__init__(message)
        self.message = message
        self.error_code = error_code
        self.exit_code = exit_code
        self.details = details or {}
        self.user_message = user_message or message
        self.error_id = str(uuid.uuid4())
        self.timestamp = datetime.now(timezone.utc).isoformat()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "error_id": self.error_id,
            "error_code": self.error_code,
            "message": self.user_message,
            "details": self.details,
            "timestamp": self.timestamp,
        }


class DomainError(DegradError):
    """An argument lies outside its mathematical domain."""

    def __init__(self, message: str, parameter: str = None, value: Any = None):
        super().__init__(
            message=message,
            error_code="DOMAIN_ERROR",
            details={"parameter": parameter, "value": _describe(value)},
            user_message=f"Invalid argument: {message}"
        )


class ValidationError(DegradError):
    """Validation error for malformed input values."""

    def __init__(self, message: str, field: str = None, value: Any = None):
        super().__init__(
            message=message,
            error_code="VALIDATION_ERROR",
            details={"field": field, "value": _describe(value)},
            user_message=f"Invalid input: {message}"
        )


class ConfigurationError(DegradError):
    """Configuration error for unreadable or schema-invalid documents."""

    def __init__(self, message: str, config_key: str = None, path: str = None):
        super().__init__(
            message=message,
            error_code="CONFIGURATION_ERROR",
            details={"config_key": config_key, "path": path},
            user_message=f"Configuration error: {message}"
        )


class TopologyError(DegradError):
    """Weight matrix is invalid or degenerate for the requested operation."""

    def __init__(self, message: str, check: str = None, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(
            message=message,
            error_code="TOPOLOGY_ERROR",
            details={"check": check, **(diagnostics or {})},
            user_message=f"Topology error: {message}"
        )


class CapabilityError(DegradError):
    """A required capability (e.g. a stochastic sampler) is missing."""

    def __init__(self, message: str, capability: str = None):
        super().__init__(
            message=message,
            error_code="CAPABILITY_ERROR",
            details={"capability": capability},
        )


class NumericalError(DegradError):
    """Linear algebra failed (eigensolver, singular system)."""

    def __init__(self, message: str, operation: str = None):
        super().__init__(
            message=message,
            error_code="NUMERICAL_ERROR",
            details={"operation": operation},
        )


class ConvergenceError(DegradError):
    """An iterative solver hit its iteration cap."""

    def __init__(self, message: str, iterations: int = None, residual: float = None):
        super().__init__(
            message=message,
            error_code="CONVERGENCE_ERROR",
            details={"iterations": iterations, "residual": residual},
        )


class CertificationError(DegradError):
    """Observed gradient differences contradict the certified (mu, L)."""

    def __init__(self, message: str, ratio: float = None, mu: float = None, L: float = None):
        super().__init__(
            message=message,
            error_code="CERTIFICATION_ERROR",
            details={"ratio": ratio, "mu": mu, "L": L},
            user_message=f"Objective constants are wrong: {message}"
        )


class StepSizeError(DegradError):
    """Step size or consensus parameters violate the contraction regime."""

    def __init__(self, message: str, inequality: str = None, values: Optional[Dict[str, Any]] = None):
        super().__init__(
            message=message,
            error_code="STEP_SIZE_ERROR",
            exit_code=EXIT_REGIME,
            details={"inequality": inequality, **(values or {})},
            user_message=f"Regime violation: {message}"
        )


class DivergenceConditionError(DegradError):
    """Noise parameters break the strict inequality c^2 + omega^2 < 1."""

    def __init__(self, message: str, c: float = None, omega: float = None):
        super().__init__(
            message=message,
            error_code="DIVERGENCE_CONDITION_ERROR",
            exit_code=EXIT_REGIME,
            details={"c": c, "omega": omega},
        )


class DominanceViolation(DegradError):
    """An empirical trajectory exceeded its theoretical envelope."""

    def __init__(self, message: str, t: int = None, empirical: float = None, envelope: float = None):
        super().__init__(
            message=message,
            error_code="DOMINANCE_VIOLATION",
            exit_code=EXIT_DOMINANCE,
            details={"t": t, "empirical": empirical, "envelope": envelope},
        )


class UsageError(DegradError):
    """Bad command-line usage."""

    def __init__(self, message: str, argument: str = None):
        super().__init__(
            message=message,
            error_code="USAGE_ERROR",
            exit_code=EXIT_USAGE,
            details={"argument": argument},
        )


def _describe(value: Any) -> Optional[str]:
    if value is None:
        return None
    if isinstance(value, np.ndarray):
        return f"ndarray(shape={value.shape})"
    return str(value)


class ErrorHandlerMiddleware:
    """Wraps every CLI command and maps failures to exit codes."""

    def dispatch(self, command: str, call_next: Callable[[], int]) -> int:
        """Run one command with comprehensive error catching."""

        command_id = str(uuid.uuid4())

        logger.info("Command started", command_id=command_id, command=command)

        try:
            exit_code = call_next()

            logger.info(
                "Command completed",
                command_id=command_id,
                command=command,
                exit_code=exit_code
            )

            return exit_code

        except DegradError as e:
            log = logger.warning if e.exit_code in (EXIT_DOMINANCE, EXIT_REGIME) else logger.error
            log(
                "Command failed",
                command_id=command_id,
                error_id=e.error_id,
                error_code=e.error_code,
                message=e.message,
                details=e.details,
                exit_code=e.exit_code
            )
            return e.exit_code

        except Exception as e:
            error_id = str(uuid.uuid4())

            logger.error(
                "Unexpected error",
                command_id=command_id,
                error_id=error_id,
                error_type=type(e).__name__,
                message=str(e),
                traceback=traceback.format_exc()
            )
            return EXIT_FAILURE


def validate_positive(
    value: float,
    name: str,
    *,
    allow_zero: bool = False,
    allow_inf: bool = False
) -> float:
    """Validate a positive (or nonnegative) real."""

    value = float(value)
    if np.isnan(value) or (np.isinf(value) and not (allow_inf and value > 0)):
        raise DomainError(f"{name} must be finite", name, value)
    if value < 0 or (value == 0 and not allow_zero):
        bound = "nonnegative" if allow_zero else "positive"
        raise DomainError(f"{name} must be {bound}, got {value}", name, value)
    return value


def validate_unit_interval(value: float, name: str) -> float:
    """Validate a real in the half-open interval (0, 1]."""

    value = float(value)
    if not (0.0 < value <= 1.0):
        raise DomainError(f"{name} must lie in (0, 1], got {value}", name, value)
    return value


def validate_square_matrix(matrix: Any, name: str) -> np.ndarray:
    """Coerce to a finite 2-D float array with equal sides."""

    array = np.asarray(matrix, dtype=float)
    if array.ndim != 2 or array.shape[0] != array.shape[1]:
        raise ValidationError(f"{name} must be a square matrix", name, array)
    if not np.all(np.isfinite(array)):
        raise ValidationError(f"{name} contains non-finite entries", name, array)
    return array


def validate_symmetric(matrix: np.ndarray, name: str, tol: float = 1e-12) -> np.ndarray:
    array = validate_square_matrix(matrix, name)
    asymmetry = float(np.max(np.abs(array - array.T))) if array.size else 0.0
    if asymmetry > tol:
        raise ValidationError(f"{name} is not symmetric (max asymmetry {asymmetry:.3e})", name, array)
    return array


def validate_shape(array: Any, shape: Sequence[int], name: str) -> np.ndarray:
    """Check an array against an expected shape."""

    array = np.asarray(array, dtype=float)
    if array.shape != tuple(shape):
        raise DomainError(
            f"{name} has shape {array.shape}, expected {tuple(shape)}",
            name,
            array
        )
    return array


def log_performance(func):
    """Decorator to log performance metrics."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        start_time = time.perf_counter()
        function_name = func.__name__

        logger.debug(
            "Function started",
            function=function_name,
            args_count=len(args),
            kwargs_keys=list(kwargs.keys())
        )

        try:
            result = func(*args, **kwargs)
            duration = time.perf_counter() - start_time

            logger.info(
                "Function completed",
                function=function_name,
                duration=f"{duration:.3f}s"
            )

            return result

        except Exception as e:
            duration = time.perf_counter() - start_time

            logger.error(
                "Function failed",
                function=function_name,
                duration=f"{duration:.3f}s",
                error=str(e)
            )

            raise

    return wrapper
