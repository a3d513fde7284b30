"""
Shared builders for the tests: small grids, synthetic fields and toy matrices
"""
from typing import Tuple

import numpy as np

from vvchip.analysis.field_objects import VectorField
from vvchip.coupling.coupling_objects import BASIS_SIZE, CouplingMatrix
from vvchip.waveguide.waveguide_objects import GridSpec

K0 = 2 * np.pi / 780e-9

FAST_CONFIG = {
    "grid": {"step_um": 0.25},
    "modes": {"model": "analytic"},
    "scenario": {"psi_count": 8},
}


def vortex_field(
    grid: GridSpec,
    ell: int,
    radius: float = 3.0,
    center: Tuple[float, float] = (0.0, 0.0),
) -> np.ndarray:
    """
    Gaussian annulus times exp(j ell phi)
    """
    r, phi = grid.polar(center)
    return np.exp(-(((r - radius) / 1.2) ** 2)) * np.exp(1j * ell * phi)


def uniform_field(grid: GridSpec, jones) -> VectorField:
    r, _ = grid.polar((0.0, 0.0))
    envelope = np.exp(-((r / 3.0) ** 2))
    jx, jy = np.asarray(jones, dtype=complex)
    return VectorField(grid, jx * envelope, jy * envelope)


def two_mode_matrix(
    kappa: float, delta: float = 0.0, column: int = 2
) -> CouplingMatrix:
    """
    G_x' coupled to one vortex mode with strength kappa; the pair is detuned by delta
    """
    values = np.zeros((BASIS_SIZE, BASIS_SIZE), dtype=complex)
    values[0, 0] = delta / 2
    values[column, column] = -delta / 2
    values[0, column] = kappa
    values[column, 0] = kappa
    return CouplingMatrix(values)


def random_hermitian(seed: int = 0, scale: float = 500.0) -> CouplingMatrix:
    rng = np.random.default_rng(seed)
    values = scale * (
        rng.standard_normal((BASIS_SIZE, BASIS_SIZE))
        + 1j * rng.standard_normal((BASIS_SIZE, BASIS_SIZE))
    )
    return CouplingMatrix(0.5 * (values + values.conj().T))
