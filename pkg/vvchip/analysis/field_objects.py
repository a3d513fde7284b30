"""
Value objects of the output-facet field analysis
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from vvchip.exceptions.chip_exception import ContractError, ModelError
from vvchip.waveguide.waveguide_objects import GridSpec


@dataclass(frozen=True, eq=False)
class VectorField:
    """
    Transverse field (E_x, E_y) sampled on a grid, arrays of shape (ny, nx)
    """

    grid: GridSpec
    ex: np.ndarray
    ey: np.ndarray

    def __post_init__(self):
        for component in (self.ex, self.ey):
            if component.shape != self.grid.shape:
                raise ContractError(
                    "VectorField",
                    f"component shape {component.shape} "
                    f"does not match {self.grid.shape}",
                )
            if not np.all(np.isfinite(component)):
                raise ModelError("field has non-finite entries")

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.ex) ** 2 + np.abs(self.ey) ** 2

    @property
    def power(self) -> float:
        return float(np.sum(self.intensity) * self.grid.pixel_area)

    def scaled(self, factor: complex) -> "VectorField":
        return VectorField(self.grid, factor * self.ex, factor * self.ey)


@dataclass(frozen=True)
class ProjectionAxis:
    """
    Linear analyzer at angle psi from e_x, or an arbitrary analyzer Jones vector
    """

    psi: float = 0.0
    jones: Optional[Tuple[complex, complex]] = None

    @property
    def vector(self) -> np.ndarray:
        if self.jones is None:
            return np.array([np.cos(self.psi), np.sin(self.psi)], dtype=complex)
        vector = np.asarray(self.jones, dtype=complex)
        return vector / np.linalg.norm(vector)

    def orthogonal(self) -> "ProjectionAxis":
        if self.jones is None:
            return ProjectionAxis(self.psi + np.pi / 2)
        jx, jy = self.vector
        return ProjectionAxis(jones=(-np.conj(jy), np.conj(jx)))


@dataclass(frozen=True)
class ReferenceBeam:
    """
    Gaussian reference for interference images.

    waist in um, curvature radius in m (None for a planar front), tilt (rad) about
    the y and x axes, relative phase delta (rad) and amplitude relative to the peak
    of the analyzed field.
    """

    waist: float = 6.0
    curvature: Optional[float] = 2e-5
    tilt: Tuple[float, float] = (0.0, 0.0)
    delta: float = 0.0
    amplitude: float = 1.0
    center: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.waist <= 0:
            raise ModelError(f"reference waist must be positive, got {self.waist}")
        if self.amplitude < 0:
            raise ModelError(
                f"reference amplitude must be non-negative, got {self.amplitude}"
            )


@dataclass
class SineFit:
    """
    Least-squares fit amplitude * sin(2 psi + phase) + offset
    """

    amplitude: float
    phase: float
    offset: float
    residual: float
    unconstrained: bool = False

    def __call__(self, psi):
        return self.amplitude * np.sin(2 * np.asarray(psi) + self.phase) + self.offset


@dataclass
class ExtinctionCurve:
    psi: np.ndarray
    extinction_db: np.ndarray
    fit: SineFit


@dataclass
class ChargeMeasurement:
    charge: int
    residual: float
    radius: float
