from dataclasses import dataclass, field, replace
from typing import Dict, List

import numpy as np
from pandas import DataFrame

from vvchip.exceptions.chip_exception import ContractError
from vvchip.waveguide.waveguide_objects import GridSpec

POLARIZATION_LABELS = ("x", "y", "x'", "y'")

JONES_X = np.array([1.0, 0.0, 0.0], dtype=complex)
JONES_Y = np.array([0.0, 1.0, 0.0], dtype=complex)


@dataclass(frozen=True, eq=False)
class ModeField:
    """
    Guided eigenmode: beta in rad/m, profile normalized so that the integral of
    |profile|^2 over the grid (um^2) equals ``norm``
    """

    grid: GridSpec
    beta: float
    k0: float
    profile: np.ndarray
    pol: str = "x"
    oam: int = 0
    norm: float = 1.0
    parity: str = ""
    jones: np.ndarray = field(default_factory=lambda: JONES_X.copy())

    @property
    def n_eff(self) -> float:
        return self.beta / self.k0

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.profile) ** 2

    def inner(self, other: "ModeField") -> complex:
        """
        Scalar overlap integral of conj(self) * other
        """
        return complex(
            np.sum(np.conj(self.profile) * other.profile) * self.grid.pixel_area
        )

    def polarized(self, pol: str) -> "ModeField":
        if pol not in POLARIZATION_LABELS:
            raise ContractError("polarized", f"unknown polarization label {pol}")
        jones = JONES_X if pol.startswith("x") else JONES_Y
        return replace(self, pol=pol, jones=jones.copy())

    def with_jones(self, jones: np.ndarray) -> "ModeField":
        return replace(self, jones=np.asarray(jones, dtype=complex))

    def __repr__(self):
        return (
            f"ModeField(pol={self.pol}, oam={self.oam}, parity={self.parity}, "
            f"n_eff={self.n_eff:.8f})"
        )


@dataclass
class DispersionCurve:
    """
    Effective indices of the ring modes versus ring radius, plus the single-mode
    waveguide index they are matched against
    """

    radii: List[float]
    n_eff: Dict[int, List[float]]
    n_eff_single: float

    def to_frame(self) -> DataFrame:
        frame = DataFrame({"radius_um": self.radii})
        frame["n_eff_gaussian"] = self.n_eff_single
        for order in sorted(self.n_eff):
            frame[f"n_eff_l{order}"] = self.n_eff[order]
        return frame
