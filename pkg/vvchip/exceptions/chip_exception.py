"""
Exceptions for the vortex emitter simulator
"""
from typing import Optional


class ChipError(Exception):
    """
    Base class of every error raised by the simulator. The exit code is used by the
    command line surface.
    """

    exit_code = 3
    kind = "chip"

    def as_record(self) -> dict:
        return {"kind": self.kind, "message": str(self), "exit_code": self.exit_code}


class ConfigError(ChipError):
    """
    Raised when a configuration file violates the schema
    """

    exit_code = 2
    kind = "config"

    def __init__(self, path: str, message: str, unit: Optional[str] = None):
        self.path = path
        self.unit = unit
        unit_text = f" (unit: {unit})" if unit else ""
        super().__init__(f"Invalid configuration at '{path}'{unit_text}: {message}")


class InvalidSweepExpression(ChipError):
    """
    Raised when a sweep or polarization expression cannot be parsed
    """

    exit_code = 2
    kind = "sweep_expression"

    def __init__(self, message: str):
        super().__init__(f"Invalid sweep expression!\n{message}")


class GeometryError(ChipError):
    """
    Raised when a waveguide does not fit the sampling grid or is degenerate
    """

    kind = "geometry"

    def __init__(self, message: str):
        super().__init__(f"Invalid geometry: {message}")


class ModelError(ChipError):
    """
    Raised when a model input leaves the physical range
    """

    kind = "model"

    def __init__(self, message: str):
        super().__init__(f"Model error: {message}")


class ContractError(ChipError):
    """
    Raised when the inputs of an operation break its contract
    """

    kind = "contract"

    def __init__(self, operation: str, message: str):
        self.operation = operation
        super().__init__(f"{operation}: {message}")


class CutoffError(ChipError):
    """
    Raised when a profile supports no guided mode
    """

    kind = "cutoff"

    def __init__(self, max_n_eff: float, n_s: float):
        self.max_n_eff = max_n_eff
        super().__init__(
            f"No guided mode: largest effective index {max_n_eff:.8f} does not "
            f"exceed the substrate index {n_s:.8f}"
        )


class NoConvergenceError(ChipError):
    """
    Raised when the eigen-iteration does not reach the residual tolerance
    """

    kind = "no_convergence"

    def __init__(self, residual: float, iterations: int):
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"Eigen-iteration did not converge after {iterations} iterations "
            f"(residual {residual:.3e})"
        )


class NoCrossingError(ChipError):
    """
    Raised when a phase matching scan has no sign change
    """

    kind = "no_crossing"

    def __init__(self, order: int, low_um: float, high_um: float):
        super().__init__(
            f"No phase matching crossing for order {order} in radius range "
            f"[{low_um}, {high_um}] um"
        )


class SingularSamplingCircle(ChipError):
    """
    Raised when the circle used for the phase circulation crosses a nodal line
    """

    kind = "singular_sampling_circle"

    def __init__(self, radius_um: float, reason: str):
        self.radius_um = radius_um
        super().__init__(f"Singular sampling circle at r={radius_um:.4f} um: {reason}")


class ArtifactIOError(ChipError):
    """
    Raised when a file cannot be read or written
    """

    exit_code = 4
    kind = "io"

    def __init__(self, path: str, reason: str):
        self.path = path
        super().__init__(f"I/O failure for {path}: {reason}")


class NumericalError(ChipError):
    """
    Raised when a linear-algebra routine fails outside the simulator's own checks
    """

    kind = "numerical"

    def __init__(self, operation: str, reason: str):
        self.operation = operation
        super().__init__(f"Numerical failure in {operation}: {reason}")
