"""Exception types raised by the wave library.

Input problems subclass ValueError and solver failures subclass RuntimeError,
so callers that only catch the built-ins keep working.
"""
from __future__ import annotations

from typing import Any, List, Optional

import numpy as np


class InvalidArgumentError(ValueError):
    """Bad grid size, mode count or similar argument."""


class GridMismatchError(ValueError):
    """Two fields live on different grids."""


class UnsupportedSymbolError(ValueError):
    """Fourier multiplier outside the supported range (negative alpha)."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of a function."""


class ConstantWaveError(ValueError):
    """A constant profile was handed to a conversion expecting a single-lobe wave."""


class ResolutionError(ValueError):
    """Field is not resolved on its grid, or the grid would exceed n_max."""


class ConfigError(ValueError):
    """Invalid solver or run configuration."""


class BranchCsvError(ValueError):
    """Malformed branch CSV file."""

    def __init__(self, message: str, row: Optional[int] = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class SolverError(RuntimeError):
    """Base class for solver failures; carries the last residual seen."""

    def __init__(self, message: str, residual: float = float("nan")):
        self.residual = residual
        super().__init__(message)


class PetviashviliDivergenceError(SolverError):
    def __init__(self, message: str, stabilizer: float, residual: float, reason: str = "max_iter"):
        self.stabilizer = stabilizer
        self.reason = reason
        super().__init__(f"{message} (M={stabilizer:.6g}, residual={residual:.3e}, reason={reason})", residual)


class NewtonConvergenceError(SolverError):
    def __init__(self, message: str, residual: float, history: Optional[List[float]] = None):
        self.history = list(history or [])
        super().__init__(f"{message} (residual={residual:.3e})", residual)


class NearFoldError(SolverError):
    """Newton Jacobian is too ill-conditioned to trust the step."""

    def __init__(self, message: str, condition: float, residual: float = float("nan")):
        self.condition = condition
        super().__init__(f"{message} (cond={condition:.3e})", residual)


class VariationalStagnationError(SolverError):
    def __init__(self, message: str, violation: float, gradient_norm: float):
        self.violation = violation
        self.gradient_norm = gradient_norm
        super().__init__(
            f"{message} (constraint violation={violation:.3e}, |grad|={gradient_norm:.3e})",
            violation,
        )


class DegenerateKernelError(SolverError):
    """Restricted operator L|X0 has a near-null even direction."""

    def __init__(self, message: str, sigma_min: float, null_vector: Optional[np.ndarray] = None):
        self.sigma_min = sigma_min
        self.null_vector = null_vector
        super().__init__(f"{message} (sigma_min={sigma_min:.3e})")


class ContinuationAbort(SolverError):
    """Continuation stopped early; ``branch`` holds the points accepted so far."""

    def __init__(self, message: str, branch: Any, residual: float = float("nan")):
        self.branch = branch
        super().__init__(message, residual)
