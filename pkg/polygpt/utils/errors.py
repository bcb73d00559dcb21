"""
Error types for polygpt.

Every error carries a stable code and the CLI exit status it maps to.
"""
from typing import Any, Dict, Optional


class PolyGPTError(Exception):
    """Base exception for polygpt errors."""

    def __init__(self, message: str, code: str = "POLYGPT_ERROR", exit_code: int = 3):
        self.message = message
        self.code = code
        self.exit_code = exit_code
        super().__init__(message)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "code": self.code,
            "message": self.message,
            "type": type(self).__name__,
        }


class DomainError(PolyGPTError):
    """Mathematically invalid input."""

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        super().__init__(message, "DOMAIN_ERROR", 3)


class ConfigurationError(PolyGPTError):
    """Unknown family, scheme, tensor kind or game table."""

    def __init__(self, message: str, setting: Optional[str] = None):
        self.setting = setting
        super().__init__(message, "CONFIGURATION_ERROR", 2)


class SolverFailure(PolyGPTError):
    """The LP solver could not produce a certified answer."""

    def __init__(self, message: str, iterations: Optional[int] = None,
                 residuals: Optional[Dict[str, float]] = None):
        self.iterations = iterations
        self.residuals = residuals or {}
        super().__init__(message, "SOLVER_FAILURE", 3)

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        data["iterations"] = self.iterations
        data["residuals"] = self.residuals
        return data


class ComputationError(PolyGPTError):
    """A subproblem failed; carries what is needed to replay it."""

    def __init__(self, message: str, subproblem: Optional[Dict[str, Any]] = None,
                 cause: Optional[Exception] = None):
        self.subproblem = subproblem or {}
        self.cause = cause
        if isinstance(cause, PolyGPTError):
            self.cause_info = cause.to_dict()
        elif cause is not None:
            self.cause_info = {"type": type(cause).__name__, "message": str(cause)}
        else:
            self.cause_info = None
        super().__init__(message, "COMPUTATION_ERROR", 3)

    def __reduce__(self):
        # crosses process boundaries without the live cause object
        return (_rebuild_computation_error, (self.message, self.subproblem, self.cause_info))

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        data["subproblem"] = self.subproblem
        if self.cause_info is not None:
            data["cause"] = self.cause_info
        return data


def _rebuild_computation_error(message: str, subproblem: Dict[str, Any],
                               cause_info: Optional[Dict[str, Any]]) -> ComputationError:
    error = ComputationError(message, subproblem)
    error.cause_info = cause_info
    return error


class VerificationFailure(PolyGPTError):
    """One or more acceptance checks failed."""

    def __init__(self, message: str, failed: Optional[list] = None):
        self.failed = failed or []
        super().__init__(message, "VERIFICATION_FAILURE", 1)
