"""
Exception hierarchy for the ionfilm solvers.

Each error carries an exit code and a human readable detail. Library code
raises; only main.py turns these into process exit codes.
"""
from typing import Any, Optional


class FilmError(Exception):
    """Base error with an exit code and detail message"""

    exit_code: int = 1

    def __init__(self, detail: str, diagnostics: Optional[dict[str, Any]] = None):
        super().__init__(detail)
        self.detail = detail
        self.diagnostics = diagnostics or {}


class ConfigError(FilmError):
    """Missing or malformed run configuration"""

    exit_code = 1


class ParameterError(FilmError, ValueError):
    """Physically inadmissible input"""

    exit_code = 1


class ViscousLimitError(ParameterError):
    """A finite-moduli path was asked to handle the infinite-modulus sentinel"""


class SingularityError(FilmError, ArithmeticError):
    """Evaluation at a pole or a removable singularity that needs another path"""

    exit_code = 2


class ConvergenceError(FilmError):
    """Root bracketing or polishing failed"""

    exit_code = 2


class IllConditionedError(ConvergenceError):
    """Boundary system too ill-conditioned to trust"""


class VerificationError(FilmError):
    """Analytic and shooting growth rates disagree beyond tolerance"""

    exit_code = 3
